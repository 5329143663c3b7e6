#pragma once

#include <Eigen/Dense>
#include <complex>
#include <unsupported/Eigen/FFT>
#include <vector>

namespace rqm::fourier {

using Cx = std::complex<double>;

inline Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

inline Eigen::VectorXcd fft(const Eigen::VectorXcd& v) {
  std::vector<Cx> in(v.data(), v.data() + v.size()), out(v.size());
  engine().fwd(out, in);
  return Eigen::Map<const Eigen::VectorXcd>(out.data(), out.size());
}

inline Eigen::VectorXcd ifft(const Eigen::VectorXcd& v) {
  std::vector<Cx> in(v.data(), v.data() + v.size()), out(v.size());
  engine().inv(out, in);
  return Eigen::Map<const Eigen::VectorXcd>(out.data(), out.size());
}

/// Signed DFT frequency of bin k for length n: 0,1,..,n/2-1,-n/2,..,-1.
inline int dft_frequency(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

/// Precomputed circulant spectrum for fast Toeplitz application.
/// K v with K_{jk} = col(j - k), col given for offsets -(n-1)..(n-1),
/// via embedding into a circulant of size m = 2n (offset slot n unused).
struct ToeplitzOperator {
  int n{0};
  Eigen::VectorXcd spectrum;  // FFT of the embedded first column, size 2n

  ToeplitzOperator() = default;

  /// `offsets(i)` must hold col(i) for i in [0, n-1] and col(i - 2n) for
  /// i in [n+1, 2n-1] (i.e. negative offsets wrapped); slot n is ignored.
  static ToeplitzOperator from_column(const Eigen::VectorXcd& offsets) {
    ToeplitzOperator t;
    t.n = static_cast<int>(offsets.size()) / 2;
    Eigen::VectorXcd c = offsets;
    c(t.n) = Cx(0.0, 0.0);
    t.spectrum = fft(c);
    return t;
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
    const int m = 2 * n;
    Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(m);
    padded.head(n) = v;
    Eigen::VectorXcd prod = fft(padded).cwiseProduct(spectrum);
    return ifft(prod).head(n);
  }
};

}  // namespace rqm::fourier
