#include "softsim/constraints.hpp"

#include <algorithm>

namespace softsim {

std::vector<PinConstraint> PinsAt(const std::vector<PinSpec>& specs, const VecX& reference,
                                  double t) {
  std::vector<PinConstraint> pins;
  for (const auto& s : specs) {
    const Vec3 d = s.displacement(t);
    for (int v : s.vertices) pins.push_back({v, VertexOf(reference, v) + d, s.axes});
  }
  return pins;
}

std::vector<ContactPair> DetectActive(const VecX& x, const std::vector<ContactPlane>& planes,
                                      const std::vector<bool>& skip) {
  std::vector<ContactPair> out;
  const int nv = static_cast<int>(x.size() / 3);
  for (int v = 0; v < nv; ++v) {
    if (!skip.empty() && skip[v]) continue;
    for (int p = 0; p < static_cast<int>(planes.size()); ++p)
      if (PlaneGap(VertexOf(x, v), planes[p]) < planes[p].activation_margin) out.push_back({v, p});
  }
  return out;
}

ConstraintSet Linearize(const std::vector<PinConstraint>& pins,
                        const std::vector<ContactPlane>& planes,
                        const std::vector<ContactPair>& active, const VecX& x) {
  const int n = static_cast<int>(x.size());
  ConstraintSet c;
  for (const auto& pin : pins)
    for (int a = 0; a < 3; ++a)
      if (pin.axes[a]) c.equality.push_back({pin.vertex, a, pin.target(a)});
  c.inequality = active;

  const int p = static_cast<int>(c.equality.size());
  const int m = static_cast<int>(c.inequality.size());
  std::vector<Triplet> tf, th;
  c.f.resize(p);
  for (int i = 0; i < p; ++i) {
    const auto& row = c.equality[i];
    tf.emplace_back(i, 3 * row.vertex + row.axis, 1.0);
    c.f(i) = x(3 * row.vertex + row.axis) - row.target;
  }
  c.h.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& pair = c.inequality[i];
    const ContactPlane& plane = planes[pair.plane];
    for (int a = 0; a < 3; ++a)
      if (plane.normal(a) != 0.0) th.emplace_back(i, 3 * pair.vertex + a, plane.normal(a));
    c.h(i) = PlaneGap(VertexOf(x, pair.vertex), plane);
  }
  c.jf.resize(p, n);
  c.jf.setFromTriplets(tf.begin(), tf.end());
  c.jh.resize(m, n);
  c.jh.setFromTriplets(th.begin(), th.end());
  return c;
}

VecX EqualityResidual(const ConstraintSet& c, const VecX& x) {
  VecX r(c.equality.size());
  for (std::size_t i = 0; i < c.equality.size(); ++i)
    r(i) = x(3 * c.equality[i].vertex + c.equality[i].axis) - c.equality[i].target;
  return r;
}

VecX InequalityResidual(const ConstraintSet& c, const std::vector<ContactPlane>& planes,
                        const VecX& x) {
  VecX r(c.inequality.size());
  for (std::size_t i = 0; i < c.inequality.size(); ++i)
    r(i) = PlaneGap(VertexOf(x, c.inequality[i].vertex), planes[c.inequality[i].plane]);
  return r;
}

double MaxPenetration(const VecX& x, const std::vector<ContactPlane>& planes) {
  double worst = 0.0;
  const int nv = static_cast<int>(x.size() / 3);
  for (int v = 0; v < nv; ++v)
    for (const auto& plane : planes) worst = std::max(worst, -PlaneGap(VertexOf(x, v), plane));
  return worst;
}

}  // namespace softsim
