#include "ndp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "ndp/warpfield.hpp"

namespace ndp::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Mat3 axis_rotation(const Vec3& axis, double angle) { return exp_so3(axis.normalized() * angle); }

// Component of `n` orthogonal to unit `d`, normalized; falls back to another
// axis when they are parallel.
Vec3 orthogonal_direction(const Vec3& d, const Vec3& n) {
  Vec3 o = n - n.dot(d) * d;
  if (o.norm() < 1e-9) {
    const Vec3 alt = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    o = alt - alt.dot(d) * d;
  }
  return o.normalized();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("deformation spec: invalid number '" + v + "' for '" + key + "'");
  }
}

Vec3 parse_axis(const std::string& key, const std::string& v) {
  if (v == "x") return Vec3::UnitX();
  if (v == "y") return Vec3::UnitY();
  if (v == "z") return Vec3::UnitZ();
  std::stringstream ss(v);
  std::string part;
  std::vector<double> c;
  while (std::getline(ss, part, ';')) c.push_back(parse_double(key, trim(part)));
  if (c.size() != 3) throw InvalidArgument("deformation spec: axis '" + v + "' must be x|y|z or a;b;c");
  Vec3 a(c[0], c[1], c[2]);
  if (a.norm() < 1e-12) throw InvalidArgument("deformation spec: zero axis for '" + key + "'");
  return a.normalized();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_axis(const Vec3& a) { return fmt(a.x()) + ";" + fmt(a.y()) + ";" + fmt(a.z()); }

}  // namespace

std::string to_string(Shape s) {
  switch (s) {
    case Shape::Plane: return "plane";
    case Shape::Cylinder: return "cylinder";
    case Shape::Sphere: return "sphere";
    case Shape::Torus: return "torus";
  }
  return "?";
}

Shape parse_shape(const std::string& s) {
  if (s == "plane") return Shape::Plane;
  if (s == "cylinder") return Shape::Cylinder;
  if (s == "sphere") return Shape::Sphere;
  if (s == "torus") return Shape::Torus;
  throw InvalidArgument("unknown shape '" + s + "' (expected plane, cylinder, sphere or torus)");
}

PointCloud sample_surface(Shape shape, std::size_t n, std::uint64_t seed, const SurfaceSize& size) {
  if (n == 0) throw InvalidArgument("sample_surface: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  PointCloud cloud;
  cloud.points.reserve(n);
  switch (shape) {
    case Shape::Plane:
      for (std::size_t i = 0; i < n; ++i) {
        const double x = (uni(rng) - 0.5) * size.plane_width;
        const double y = (uni(rng) - 0.5) * size.plane_height;
        cloud.points.emplace_back(x, y, 0.0);
      }
      break;
    case Shape::Cylinder:
      for (std::size_t i = 0; i < n; ++i) {
        const double t = kTwoPi * uni(rng);
        const double z = (uni(rng) - 0.5) * size.cylinder_height;
        cloud.points.emplace_back(size.cylinder_radius * std::cos(t), size.cylinder_radius * std::sin(t), z);
      }
      break;
    case Shape::Sphere:
      for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(size.sphere_radius * random_unit(rng));
      break;
    case Shape::Torus: {
      const double big = size.torus_major;
      const double small = size.torus_minor;
      while (cloud.points.size() < n) {
        const double u = kTwoPi * uni(rng);
        const double v = kTwoPi * uni(rng);
        // area element is proportional to (R + r cos v)
        if (uni(rng) * (big + small) > big + small * std::cos(v)) continue;
        const double ring = big + small * std::cos(v);
        cloud.points.emplace_back(ring * std::cos(u), ring * std::sin(u), small * std::sin(v));
      }
      break;
    }
  }
  return cloud;
}

DeformationSpec parse_deformation(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = trim(text.substr(0, colon));
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InvalidArgument("deformation spec: expected key=value, got '" + item + "'");
      kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
  }

  DeformationSpec spec;
  std::vector<std::string> allowed;
  auto take = [&](const std::string& key, auto&& apply) {
    allowed.push_back(key);
    if (const auto it = kv.find(key); it != kv.end()) apply(it->second);
  };
  auto num = [&](const std::string& key, double& out) { take(key, [&](const std::string& v) { out = parse_double(key, v); }); };
  auto axis = [&](const std::string& key, Vec3& out) { take(key, [&](const std::string& v) { out = parse_axis(key, v); }); };
  auto rigid_keys = [&] {
    num("rx", spec.rotation.x());
    num("ry", spec.rotation.y());
    num("rz", spec.rotation.z());
    num("tx", spec.translation.x());
    num("ty", spec.translation.y());
    num("tz", spec.translation.z());
  };

  if (kind == "rigid") {
    spec.kind = DeformationSpec::Kind::Rigid;
    rigid_keys();
  } else if (kind == "similarity") {
    spec.kind = DeformationSpec::Kind::Similarity;
    rigid_keys();
    num("s", spec.scale);
    if (!(spec.scale > 0.0)) throw InvalidArgument("deformation spec: similarity scale must be > 0");
  } else if (kind == "twist") {
    spec.kind = DeformationSpec::Kind::Twist;
    axis("axis", spec.axis);
    num("rate", spec.rate);
    take("rate_deg", [&](const std::string& v) { spec.rate = parse_double("rate_deg", v) * std::numbers::pi / 180.0; });
  } else if (kind == "bend") {
    spec.kind = DeformationSpec::Kind::Bend;
    spec.axis = Vec3::UnitX();
    axis("axis", spec.axis);
    axis("normal", spec.normal);
    num("curvature", spec.curvature);
  } else if (kind == "sine") {
    spec.kind = DeformationSpec::Kind::SineWave;
    spec.axis = Vec3::UnitX();
    axis("axis", spec.axis);
    axis("normal", spec.normal);
    num("amplitude", spec.amplitude);
    num("frequency", spec.frequency);
  } else {
    throw InvalidArgument("deformation spec: unknown kind '" + kind + "' (expected rigid, similarity, twist, bend, sine)");
  }
  for (const auto& [key, _] : kv) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidArgument("deformation spec: unknown key '" + key + "' for kind '" + kind + "'");
    }
  }
  return spec;
}

std::string format_deformation(const DeformationSpec& spec) {
  auto rigid = [&] {
    return "rx=" + fmt(spec.rotation.x()) + ",ry=" + fmt(spec.rotation.y()) + ",rz=" + fmt(spec.rotation.z()) +
           ",tx=" + fmt(spec.translation.x()) + ",ty=" + fmt(spec.translation.y()) + ",tz=" + fmt(spec.translation.z());
  };
  switch (spec.kind) {
    case DeformationSpec::Kind::Rigid: return "rigid:" + rigid();
    case DeformationSpec::Kind::Similarity: return "similarity:s=" + fmt(spec.scale) + "," + rigid();
    case DeformationSpec::Kind::Twist: return "twist:axis=" + fmt_axis(spec.axis) + ",rate=" + fmt(spec.rate);
    case DeformationSpec::Kind::Bend:
      return "bend:axis=" + fmt_axis(spec.axis) + ",normal=" + fmt_axis(spec.normal) + ",curvature=" + fmt(spec.curvature);
    case DeformationSpec::Kind::SineWave:
      return "sine:axis=" + fmt_axis(spec.axis) + ",normal=" + fmt_axis(spec.normal) + ",amplitude=" +
             fmt(spec.amplitude) + ",frequency=" + fmt(spec.frequency);
  }
  return {};
}

Vec3 deform_point(const Vec3& p, const DeformationSpec& spec) {
  switch (spec.kind) {
    case DeformationSpec::Kind::Rigid: return exp_so3(spec.rotation) * p + spec.translation;
    case DeformationSpec::Kind::Similarity: return spec.scale * (exp_so3(spec.rotation) * p) + spec.translation;
    case DeformationSpec::Kind::Twist: {
      const Vec3 a = spec.axis.normalized();
      return axis_rotation(a, spec.rate * p.dot(a)) * p;
    }
    case DeformationSpec::Kind::Bend: {
      if (std::abs(spec.curvature) < 1e-12) return p;
      const Vec3 d = spec.axis.normalized();
      const Vec3 n = orthogonal_direction(d, spec.normal);
      const double u = p.dot(d);
      const double w = p.dot(n);
      const double radius = 1.0 / spec.curvature;
      const double theta = spec.curvature * u;
      const double u2 = (radius - w) * std::sin(theta);
      const double w2 = radius - (radius - w) * std::cos(theta);
      return p + (u2 - u) * d + (w2 - w) * n;
    }
    case DeformationSpec::Kind::SineWave: {
      const Vec3 d = spec.axis.normalized();
      const Vec3 n = orthogonal_direction(d, spec.normal);
      return p + spec.amplitude * std::sin(kTwoPi * spec.frequency * p.dot(d)) * n;
    }
  }
  return p;
}

DeformedCloud apply_deformation(const PointCloud& cloud, const DeformationSpec& spec) {
  DeformedCloud out;
  out.cloud = cloud;
  out.ground_truth.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 q = deform_point(cloud.points[i], spec);
    out.cloud.points[i] = q;
    out.ground_truth[i] = q - cloud.points[i];
  }
  return out;
}

PartialCloud make_partial(const PointCloud& cloud, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("make_partial: fraction must be in (0, 1]");
  PartialCloud out;
  const std::size_t n = cloud.size();
  if (fraction == 1.0 || n == 0) {
    out.cloud = cloud;
    out.kept.resize(n);
    std::iota(out.kept.begin(), out.kept.end(), std::size_t{0});
    return out;
  }
  std::mt19937_64 rng(seed);
  const Vec3 dir = random_unit(rng);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cloud.points[a].dot(dir) < cloud.points[b].dot(dir);
  });
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  out.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(out.kept.begin(), out.kept.end());

  out.cloud.points.reserve(keep);
  for (const auto& attr : cloud.attributes) out.cloud.attributes.push_back({attr.name, attr.type, {}});
  for (auto i : out.kept) {
    out.cloud.points.push_back(cloud.points[i]);
    for (std::size_t a = 0; a < cloud.attributes.size(); ++a) {
      out.cloud.attributes[a].values.push_back(cloud.attributes[a].values[i]);
    }
  }
  return out;
}

NoisyCloud add_noise(const PointCloud& cloud, double ratio, double radius, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw InvalidArgument("add_noise: ratio must be in [0, 1]");
  if (!(radius > 0.0)) throw InvalidArgument("add_noise: radius must be > 0");
  NoisyCloud out;
  out.cloud = cloud;
  const std::size_t n = cloud.size();
  const auto count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto i : idx) {
    const Vec3 dir = random_unit(rng);
    out.cloud.points[i] += dir * (radius * std::cbrt(uni(rng)));
  }
  out.perturbed = std::move(idx);
  return out;
}

Instance make_instance(Shape shape, const DeformationSpec& spec, std::size_t n, std::uint64_t seed,
                       const SurfaceSize& size) {
  Instance inst;
  inst.shape = shape;
  inst.deformation = spec;
  inst.source = sample_surface(shape, n, seed, size);
  auto deformed = apply_deformation(inst.source, spec);
  inst.target = std::move(deformed.cloud);
  inst.ground_truth = std::move(deformed.ground_truth);
  return inst;
}

Instance make_suite_instance(std::size_t index, std::uint64_t seed, const SuiteOptions& options) {
  std::mt19937_64 rng(seed * 1000003ull + index);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

  SurfaceSize size;
  const double base_diagonal = std::hypot(size.plane_width, size.plane_height);
  const double scale = between(0.8, 1.8) / base_diagonal;
  size.plane_width *= scale;
  size.plane_height *= scale;

  DeformationSpec nonrigid;
  switch (index % 3) {
    case 0:
      nonrigid.kind = DeformationSpec::Kind::Twist;
      nonrigid.axis = Vec3::UnitX();
      nonrigid.rate = between(1.0, 1.6) / scale;
      break;
    case 1:
      nonrigid.kind = DeformationSpec::Kind::Bend;
      nonrigid.axis = Vec3::UnitX();
      nonrigid.normal = Vec3::UnitZ();
      nonrigid.curvature = between(1.6, 2.4) / scale;
      break;
    default:
      nonrigid.kind = DeformationSpec::Kind::SineWave;
      nonrigid.axis = Vec3::UnitX();
      nonrigid.normal = Vec3::UnitZ();
      nonrigid.amplitude = between(0.08, 0.12) * scale;
      nonrigid.frequency = between(0.8, 1.2) / scale;
      break;
  }
  DeformationSpec rigid;
  rigid.kind = DeformationSpec::Kind::Rigid;
  rigid.rotation = random_unit(rng) * between(0.05, 0.2);
  rigid.translation = random_unit(rng) * between(0.02, 0.08) * scale;

  Instance inst;
  inst.shape = Shape::Plane;
  inst.deformation = nonrigid;
  inst.source = sample_surface(Shape::Plane, options.points, rng(), size);
  PointCloud target = inst.source;
  inst.ground_truth.resize(inst.source.size());
  for (std::size_t i = 0; i < inst.source.size(); ++i) {
    const Vec3 q = deform_point(deform_point(inst.source.points[i], nonrigid), rigid);
    target.points[i] = q;
    inst.ground_truth[i] = q - inst.source.points[i];
  }
  const double diagonal = std::hypot(size.plane_width, size.plane_height);
  if (options.overlap < 1.0) target = make_partial(target, options.overlap, rng()).cloud;
  if (options.noise_ratio > 0.0) {
    target = add_noise(target, options.noise_ratio, options.noise_radius_fraction * diagonal, rng()).cloud;
  }
  inst.target = std::move(target);
  return inst;
}

}  // namespace ndp::synth
