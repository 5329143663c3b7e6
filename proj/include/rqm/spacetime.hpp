#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace rqm {

// 1+1-dimensional Minkowski geometry, natural units (c = hbar = 1),
// signature (+,-): interval^2 = dt^2 - dx^2.

struct Event {
  double t{0.0};
  double x{0.0};
};

/// Additive boost parameter; velocity = tanh(chi).
struct Rapidity {
  double chi{0.0};
};

/// Active Lorentz boost of an event.
inline Event boost_event(const Event& e, Rapidity r) {
  const double ch = std::cosh(r.chi);
  const double sh = std::sinh(r.chi);
  return Event{e.t * ch + e.x * sh, e.x * ch + e.t * sh};
}

enum class IntervalClass { Timelike, Spacelike, Lightlike };

/// Sign of (dt)^2 - (dx)^2 with a scale-aware tolerance for the null case:
/// |s| <= 1e-9 * max(1, dt^2 + dx^2).
inline IntervalClass classify_interval(const Event& a, const Event& b) {
  const double dt = b.t - a.t;
  const double dx = b.x - a.x;
  const double s = dt * dt - dx * dx;
  const double scale = std::max(1.0, dt * dt + dx * dx);
  if (std::abs(s) <= 1e-9 * scale) return IntervalClass::Lightlike;
  return s > 0.0 ? IntervalClass::Timelike : IntervalClass::Spacelike;
}

/// An extended detector region: the set of simultaneous events of a device
/// rest frame, i.e. a straight segment with |slope| = |tanh(rapidity)| < 1.
/// Endpoints are center +- half_length * (sinh(rapidity), cosh(rapidity)).
struct SpacelikeSegment {
  Event center;
  double half_length{1.0};  // proper half-width in the device rest frame
  Rapidity rapidity;
};

/// Endpoints of the segment; the first has the smaller x coordinate.
inline std::pair<Event, Event> segment_endpoints(const SpacelikeSegment& s) {
  if (!(s.half_length > 0.0))
    throw std::invalid_argument("segment half_length must be positive");
  const double dt = s.half_length * std::sinh(s.rapidity.chi);
  const double dx = s.half_length * std::cosh(s.rapidity.chi);
  Event lo{s.center.t - dt, s.center.x - dx};
  Event hi{s.center.t + dt, s.center.x + dx};
  return {lo, hi};  // dx > 0, so lo.x < hi.x
}

enum class CausalRelation { Precedes, Succeeds, Spacelike, Partial };

namespace detail {

// Lower boundary of the causal future J+(A): the union of forward cones over
// the points of A. Piecewise linear in x with slopes (-1, tanh eta, +1) at
// kinks A.left.x and A.right.x, hence convex.
inline double future_boundary(const Event& lo, const Event& hi, double x) {
  if (x <= lo.x) return lo.t + (lo.x - x);
  if (x >= hi.x) return hi.t + (x - hi.x);
  const double s = (hi.t - lo.t) / (hi.x - lo.x);
  return lo.t + s * (x - lo.x);
}

// Upper boundary of the causal past J-(A); concave, slopes (+1, tanh eta, -1).
inline double past_boundary(const Event& lo, const Event& hi, double x) {
  if (x <= lo.x) return lo.t - (lo.x - x);
  if (x >= hi.x) return hi.t - (x - hi.x);
  const double s = (hi.t - lo.t) / (hi.x - lo.x);
  return lo.t + s * (x - lo.x);
}

inline double chord_t(const Event& lo, const Event& hi, double x) {
  const double s = (hi.t - lo.t) / (hi.x - lo.x);
  return lo.t + s * (x - lo.x);
}

}  // namespace detail

/// Closed-form causal classification of two extended spacelike segments.
///
/// Precedes:  B contained in J+(A).  Since B is a spacelike chord and the J+
/// boundary is convex, chord-minus-boundary is concave and containment is
/// decided at B's two endpoints alone.
/// Spacelike: B disjoint from J+(A) and J-(A).  Maxima of chord-minus-convex
/// can sit at boundary kinks, so disjointness additionally checks the two
/// kink abscissae clipped to B's x-range.
/// Partial:   everything else, including the degenerate collinear-overlap
/// case where B lies on A's own locus (kept out of the strict order so the
/// precedence relation stays acyclic).
inline CausalRelation causal_relation(const SpacelikeSegment& a,
                                      const SpacelikeSegment& b) {
  const auto [alo, ahi] = segment_endpoints(a);
  const auto [blo, bhi] = segment_endpoints(b);

  const bool in_future = blo.t >= detail::future_boundary(alo, ahi, blo.x) &&
                         bhi.t >= detail::future_boundary(alo, ahi, bhi.x);
  const bool in_past = blo.t <= detail::past_boundary(alo, ahi, blo.x) &&
                       bhi.t <= detail::past_boundary(alo, ahi, bhi.x);
  if (in_future && in_past) return CausalRelation::Partial;
  if (in_future) return CausalRelation::Precedes;
  if (in_past) return CausalRelation::Succeeds;

  bool clear_of_future = blo.t < detail::future_boundary(alo, ahi, blo.x) &&
                         bhi.t < detail::future_boundary(alo, ahi, bhi.x);
  bool clear_of_past = blo.t > detail::past_boundary(alo, ahi, blo.x) &&
                       bhi.t > detail::past_boundary(alo, ahi, bhi.x);
  for (double xk : {alo.x, ahi.x}) {
    if (xk <= blo.x || xk >= bhi.x) continue;  // kink outside B's x-range
    const double tb = detail::chord_t(blo, bhi, xk);
    clear_of_future = clear_of_future && tb < detail::future_boundary(alo, ahi, xk);
    clear_of_past = clear_of_past && tb > detail::past_boundary(alo, ahi, xk);
  }
  if (clear_of_future && clear_of_past) return CausalRelation::Spacelike;
  return CausalRelation::Partial;
}

}  // namespace rqm
