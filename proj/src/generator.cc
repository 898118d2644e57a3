// Copyright 2026 The SceneFlow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sceneflow/generator.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sceneflow/config_text.h"
#include "sceneflow/error.h"

namespace sceneflow {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Out of line: GCC 11 at -O3 can fold the float round trip away when this
// is vectorized together with neighbouring stores.
[[gnu::noinline]] double Quantize(double v, bool enabled) {
  return enabled ? static_cast<double>(static_cast<float>(v)) : v;
}

std::string Vec3Text(const Vec3& v) {
  return FormatDouble(v.x()) + " " + FormatDouble(v.y()) + " " +
         FormatDouble(v.z());
}

struct Footprint {
  Transform3 world_to_box;
  double half_x;
  double half_y;
};

// Area-weighted point on the five visible faces (no bottom), pulled `inset`
// meters inside the box so label containment is robust to rounding.
Vec3 SampleSurface(const Vec3& dims, std::mt19937_64& rng) {
  const double l = dims.x(), w = dims.y(), h = dims.z();
  const double inset = std::min(0.01, 0.25 * dims.minCoeff());
  const double areas[5] = {l * w, w * h, w * h, l * h, l * h};
  std::discrete_distribution<int> face(std::begin(areas), std::end(areas));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double hx = 0.5 * l - inset, hy = 0.5 * w - inset, hz = 0.5 * h - inset;
  const int f = face(rng);
  const double a = u(rng) * 2.0, b = u(rng) * 2.0;
  switch (f) {
    case 0: return {a * hx, b * hy, hz};
    case 1: return {hx, a * hy, b * hz};
    case 2: return {-hx, a * hy, b * hz};
    case 3: return {a * hx, hy, b * hz};
    default: return {a * hx, -hy, b * hz};
  }
}

}  // namespace

void ValidateSpec(const SceneSpec& spec) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
  if (spec.duration_frames < 1) fail("duration_frames must be >= 1");
  if (spec.frame_period_us <= 0) fail("frame_period_us must be > 0");
  if (spec.ground.extent < 0 || spec.ground.density < 0) {
    fail("ground extent/density must be >= 0");
  }
  if (spec.ground.density > 0 && spec.ground.extent <= 0) {
    fail("ground with density needs a positive extent");
  }
  if (spec.clutter.count < 0) fail("clutter count must be >= 0");
  if (spec.clutter.count > 0 &&
      (spec.clutter.extent <= 0 || spec.clutter.height <= 0)) {
    fail("clutter needs positive extent and height");
  }
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& o = spec.objects[i];
    const std::string tag = "object " + std::to_string(i) + ": ";
    if (!IsObjectClass(o.class_id)) fail(tag + "invalid class");
    if (!o.dims.allFinite() || (o.dims.array() <= 0.0).any()) {
      fail(tag + "dims must be positive");
    }
    if (!o.position.allFinite() || !o.velocity.allFinite() ||
        !std::isfinite(o.heading) || !std::isfinite(o.yaw_rate)) {
      fail(tag + "non-finite motion");
    }
    if (o.despawn_frame <= o.spawn_frame) fail(tag + "despawn must follow spawn");
    if (o.surface_points < 0) fail(tag + "surface points must be >= 0");
  }
}

std::string SceneSpecToText(const SceneSpec& spec) {
  std::ostringstream out;
  out << "duration_frames = " << spec.duration_frames << "\n"
      << "frame_period_us = " << spec.frame_period_us << "\n"
      << "seed = " << spec.seed << "\n"
      << "float32_payload = " << (spec.float32_payload ? "true" : "false")
      << "\n\n[ego]\n"
      << "position = " << Vec3Text(spec.ego.position) << "\n"
      << "heading = " << FormatDouble(spec.ego.heading) << "\n"
      << "velocity = " << Vec3Text(spec.ego.velocity) << "\n"
      << "yaw_rate = " << FormatDouble(spec.ego.yaw_rate) << "\n\n[ground]\n"
      << "extent = " << FormatDouble(spec.ground.extent) << "\n"
      << "density = " << FormatDouble(spec.ground.density) << "\n"
      << "z = " << FormatDouble(spec.ground.z) << "\n\n[clutter]\n"
      << "count = " << spec.clutter.count << "\n"
      << "extent = " << FormatDouble(spec.clutter.extent) << "\n"
      << "height = " << FormatDouble(spec.clutter.height) << "\n";
  for (const ObjectSpec& o : spec.objects) {
    out << "\n[object]\n"
        << "class = " << ClassName(o.class_id) << "\n"
        << "dims = " << Vec3Text(o.dims) << "\n"
        << "position = " << Vec3Text(o.position) << "\n"
        << "heading = " << FormatDouble(o.heading) << "\n"
        << "velocity = " << Vec3Text(o.velocity) << "\n"
        << "yaw_rate = " << FormatDouble(o.yaw_rate) << "\n"
        << "spawn = " << o.spawn_frame << "\n"
        << "despawn = " << o.despawn_frame << "\n"
        << "points = " << o.surface_points << "\n";
  }
  return out.str();
}

SceneSpec SceneSpecFromText(std::string_view text) {
  const ConfigDocument doc = ParseConfigText(text);
  SceneSpec spec;
  {
    SectionReader top(doc.sections[0]);
    spec.duration_frames =
        static_cast<int>(top.GetInt("duration_frames", spec.duration_frames));
    spec.frame_period_us = top.GetInt("frame_period_us", spec.frame_period_us);
    spec.seed = top.GetUint("seed", spec.seed);
    spec.float32_payload = top.GetBool("float32_payload", spec.float32_payload);
    top.Finish();
  }
  for (std::size_t i = 1; i < doc.sections.size(); ++i) {
    const ConfigSection& s = doc.sections[i];
    SectionReader r(s);
    if (s.name == "ego") {
      spec.ego.position = r.GetVec3("position", spec.ego.position);
      spec.ego.heading = r.GetDouble("heading", spec.ego.heading);
      spec.ego.velocity = r.GetVec3("velocity", spec.ego.velocity);
      spec.ego.yaw_rate = r.GetDouble("yaw_rate", spec.ego.yaw_rate);
    } else if (s.name == "ground") {
      spec.ground.extent = r.GetDouble("extent", spec.ground.extent);
      spec.ground.density = r.GetDouble("density", spec.ground.density);
      spec.ground.z = r.GetDouble("z", spec.ground.z);
    } else if (s.name == "clutter") {
      spec.clutter.count = static_cast<int>(r.GetInt("count", 0));
      spec.clutter.extent = r.GetDouble("extent", spec.clutter.extent);
      spec.clutter.height = r.GetDouble("height", spec.clutter.height);
    } else if (s.name == "object") {
      ObjectSpec o;
      const std::string cls = r.GetString("class", "vehicle");
      auto parsed = ParseClassName(cls);
      if (!parsed || !IsObjectClass(*parsed)) {
        throw Error(ErrorCode::kConfig, "line " + std::to_string(s.line) +
                                            ": unknown object class '" + cls +
                                            "'");
      }
      o.class_id = *parsed;
      o.dims = r.GetVec3("dims", o.dims);
      o.position = r.GetVec3("position", o.position);
      o.heading = r.GetDouble("heading", o.heading);
      o.velocity = r.GetVec3("velocity", o.velocity);
      o.yaw_rate = r.GetDouble("yaw_rate", o.yaw_rate);
      o.spawn_frame = static_cast<int>(r.GetInt("spawn", o.spawn_frame));
      o.despawn_frame = static_cast<int>(r.GetInt("despawn", o.despawn_frame));
      o.surface_points = static_cast<int>(r.GetInt("points", o.surface_points));
      spec.objects.push_back(o);
    } else {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(s.line) +
                                          ": unknown section [" + s.name + "]");
    }
    r.Finish();
  }
  ValidateSpec(spec);
  return spec;
}

SceneSpec LoadSceneSpec(const std::string& path) {
  return SceneSpecFromText(ReadTextFile(path));
}

std::uint64_t SpecHash(const SceneSpec& spec) {
  // FNV-1a over the canonical text rendering.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : SceneSpecToText(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::int64_t FrameTimestampUs(const SceneSpec& spec, int frame_index) {
  return static_cast<std::int64_t>(frame_index) * spec.frame_period_us;
}

Transform3 EgoPoseAt(const EgoSpec& ego, double t) {
  return Transform3::Yaw(ego.heading + ego.yaw_rate * t,
                         ego.position + ego.velocity * t);
}

Transform3 ObjectPoseAt(const ObjectSpec& object, double t) {
  return Transform3::Yaw(object.heading + object.yaw_rate * t,
                         object.position + object.velocity * t);
}

bool ObjectLive(const ObjectSpec& object, int frame_index) {
  return frame_index >= object.spawn_frame && frame_index < object.despawn_frame;
}

namespace {

struct Sample {
  Vec3 position;  // world frame for static points, body frame for objects
  double f0;
  double f1;
};

// Everything random about a segment, drawn once: static world points and
// per-object body samples with their laser features. Frames only differ in
// where these samples are seen from.
struct SegmentSamples {
  std::vector<Sample> statics;
  std::vector<std::vector<Sample>> bodies;
};

SegmentSamples DrawSamples(const SceneSpec& spec) {
  SegmentSamples out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  out.bodies.resize(spec.objects.size());
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    std::mt19937_64 rng(SplitMix64(spec.seed ^ SplitMix64(0x10000 + i)));
    const ObjectSpec& o = spec.objects[i];
    for (int n = 0; n < o.surface_points; ++n) {
      Sample s;
      s.position = SampleSurface(o.dims, rng);
      s.f0 = unit(rng);
      s.f1 = unit(rng);
      out.bodies[i].push_back(s);
    }
  }

  // Footprints of every object at every frame it is live.
  std::vector<Footprint> footprints;
  for (const ObjectSpec& o : spec.objects) {
    for (int k = std::max(0, o.spawn_frame); k < std::min(o.despawn_frame, spec.duration_frames);
         ++k) {
      const double t = FrameTimestampUs(spec, k) * 1e-6;
      footprints.push_back({Invert(ObjectPoseAt(o, t)), 0.5 * o.dims.x() + kStaticClearance,
                            0.5 * o.dims.y() + kStaticClearance});
    }
  }
  auto covered = [&](const Vec3& world) {
    for (const Footprint& f : footprints) {
      const Vec3 local = Apply(f.world_to_box, world);
      if (std::abs(local.x()) <= f.half_x && std::abs(local.y()) <= f.half_y) return true;
    }
    return false;
  };

  std::mt19937_64 rng(SplitMix64(spec.seed ^ 0x5354415449435355ULL));
  auto sample_static = [&](int count, double extent, double z_lo, double z_span) {
    const std::int64_t max_attempts = 1000 * static_cast<std::int64_t>(count) + 1000;
    std::int64_t attempts = 0;
    for (int n = 0; n < count;) {
      if (++attempts > max_attempts) {
        throw Error(ErrorCode::kConfig, "static points cannot be placed clear of objects");
      }
      Sample s;
      s.position = Vec3((unit(rng) - 0.5) * extent, (unit(rng) - 0.5) * extent,
                        z_lo + (z_span > 0 ? (1.0 - unit(rng)) * z_span : 0.0));
      s.f0 = unit(rng);
      s.f1 = unit(rng);
      if (covered(s.position)) continue;
      out.statics.push_back(s);
      ++n;
    }
  };
  const int ground_count = static_cast<int>(
      std::llround(spec.ground.density * spec.ground.extent * spec.ground.extent));
  sample_static(ground_count, spec.ground.extent, spec.ground.z, 0.0);
  sample_static(spec.clutter.count, spec.clutter.extent, spec.ground.z, spec.clutter.height);
  return out;
}

Frame FrameFromSamples(const SceneSpec& spec, const SegmentSamples& samples, int frame_index,
                       std::vector<PointSource>* sources) {
  if (frame_index < 0 || frame_index >= spec.duration_frames) {
    throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  }
  const bool q = spec.float32_payload;
  const std::int64_t ts = FrameTimestampUs(spec, frame_index);
  const double t = static_cast<double>(ts) * 1e-6;

  Frame frame;
  frame.timestamp_us = ts;
  frame.ego_pose = EgoPoseAt(spec.ego, t);
  const Transform3 world_to_av = Invert(frame.ego_pose);
  const double ego_yaw = spec.ego.heading + spec.ego.yaw_rate * t;

  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& o = spec.objects[i];
    if (!ObjectLive(o, frame_index)) continue;
    const Transform3 in_av = Compose(world_to_av, ObjectPoseAt(o, t));
    ObjectLabel label;
    label.track_id = i + 1;
    label.class_id = o.class_id;
    label.box.center = Vec3(Quantize(in_av.translation().x(), q),
                            Quantize(in_av.translation().y(), q),
                            Quantize(in_av.translation().z(), q));
    label.box.dims = Vec3(Quantize(o.dims.x(), q), Quantize(o.dims.y(), q),
                          Quantize(o.dims.z(), q));
    // Quantizing can push a heading just past +pi; wrap afterwards.
    label.box.heading =
        WrapAngle(Quantize(WrapAngle(o.heading + o.yaw_rate * t - ego_yaw), q));
    frame.labels.push_back(label);
  }

  auto emit = [&](const Vec3& world, const Sample& s, int object) {
    const Vec3 av = Apply(world_to_av, world);
    Point3 p;
    p.x = Quantize(av.x(), q);
    p.y = Quantize(av.y(), q);
    p.z = Quantize(av.z(), q);
    p.f0 = Quantize(s.f0, q);
    p.f1 = Quantize(s.f1, q);
    frame.points.push_back(p);
    if (sources) sources->push_back({object, object < 0 ? Vec3::Zero() : s.position});
  };

  if (sources) sources->clear();
  for (const Sample& s : samples.statics) emit(s.position, s, -1);
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& o = spec.objects[i];
    if (!ObjectLive(o, frame_index)) continue;
    const Transform3 pose = ObjectPoseAt(o, t);
    for (const Sample& s : samples.bodies[i]) {
      emit(Apply(pose, s.position), s, static_cast<int>(i));
    }
  }
  return frame;
}

}  // namespace

Frame GenerateFrame(const SceneSpec& spec, int frame_index,
                    std::vector<PointSource>* sources) {
  ValidateSpec(spec);
  return FrameFromSamples(spec, DrawSamples(spec), frame_index, sources);
}

RunSegment Generate(const SceneSpec& spec) {
  ValidateSpec(spec);
  const SegmentSamples samples = DrawSamples(spec);
  RunSegment seg;
  seg.meta = {SpecHash(spec), spec.seed};
  seg.frames.reserve(spec.duration_frames);
  for (int k = 0; k < spec.duration_frames; ++k) {
    seg.frames.push_back(FrameFromSamples(spec, samples, k, nullptr));
  }
  return seg;
}

std::vector<OracleFlow> OracleFlowForFrame(const SceneSpec& spec,
                                           int frame_index) {
  if (frame_index < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "oracle flow needs a previous frame (index >= 1)");
  }
  std::vector<PointSource> sources;
  GenerateFrame(spec, frame_index, &sources);
  const double t0 = FrameTimestampUs(spec, frame_index) * 1e-6;
  const double t1 = FrameTimestampUs(spec, frame_index - 1) * 1e-6;
  const double dt = t0 - t1;
  const Transform3 world_to_av = Invert(EgoPoseAt(spec.ego, t0));

  std::vector<OracleFlow> out(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const PointSource& s = sources[i];
    if (s.object < 0) continue;  // world-static: exactly zero, background
    const ObjectSpec& o = spec.objects[s.object];
    out[i].class_id = o.class_id;
    if (o.spawn_frame == frame_index) {
      out[i].valid = false;
      continue;
    }
    const Vec3 now = Apply(world_to_av, Apply(ObjectPoseAt(o, t0), s.body));
    const Vec3 before = Apply(world_to_av, Apply(ObjectPoseAt(o, t1), s.body));
    out[i].flow = (now - before) / dt;
  }
  return out;
}

SceneSpec SampleUrbanScene(const UrbanSceneOptions& o, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneSpec spec;
  spec.duration_frames = o.duration_frames;
  spec.seed = seed;
  const double duration = (o.duration_frames - 1) * (spec.frame_period_us * 1e-6);

  spec.ego.heading = 2.0 * std::numbers::pi * unit(rng) - std::numbers::pi;
  const double ego_speed = o.ego_speed_max * unit(rng);
  spec.ego.velocity = Vec3(std::cos(spec.ego.heading), std::sin(spec.ego.heading), 0.0) * ego_speed;
  spec.ego.yaw_rate = o.ego_yaw_rate_max * (2.0 * unit(rng) - 1.0);
  const Vec3 mid = spec.ego.velocity * (0.5 * duration);

  spec.ground = {o.ground_extent, o.ground_density, 0.0};
  spec.clutter = {o.clutter_count, o.clutter_extent, 3.0};

  // Footprint centers sampled along each trajectory, for the spacing test.
  const int probes = std::max(2, o.duration_frames);
  auto track = [&](const ObjectSpec& obj) {
    std::vector<Vec3> c;
    for (int k = 0; k < probes; ++k) {
      const double t = duration * k / (probes - 1);
      c.push_back(obj.position + obj.velocity * t);
    }
    return c;
  };
  std::vector<std::vector<Vec3>> tracks;
  std::vector<double> radii;

  auto place = [&](const ClassMotion& m, ObjectClass cls) {
    for (int n = 0; n < m.count; ++n) {
      for (int attempt = 0; attempt < 200; ++attempt) {
        ObjectSpec obj;
        obj.class_id = cls;
        obj.dims = m.dims;
        obj.surface_points = m.surface_points;
        const double r = o.placement_radius * std::sqrt(unit(rng));
        const double a = 2.0 * std::numbers::pi * unit(rng);
        obj.heading = 2.0 * std::numbers::pi * unit(rng) - std::numbers::pi;
        const bool moving = unit(rng) >= m.stationary_fraction;
        double speed = 0.0;
        if (moving) {
          std::normal_distribution<double> sp(m.speed_mean, m.speed_stddev);
          speed = std::clamp(sp(rng), 0.6, m.speed_mean + 3.0 * m.speed_stddev);
        }
        obj.velocity = Vec3(std::cos(obj.heading), std::sin(obj.heading), 0.0) * speed;
        // Centered on the ego's mid-segment position in the middle of the
        // object's own path.
        obj.position = mid + Vec3(r * std::cos(a), r * std::sin(a), 0.0) - obj.velocity * (0.5 * duration);
        obj.position.z() = 0.5 * m.dims.z();
        const std::vector<Vec3> path = track(obj);
        const double radius = 0.5 * std::hypot(m.dims.x(), m.dims.y());
        bool clear = true;
        for (std::size_t j = 0; j < tracks.size() && clear; ++j)
          for (int k = 0; k < probes && clear; ++k)
            clear = (path[k] - tracks[j][k]).head<2>().norm() > radius + radii[j] + o.separation;
        // Keep clear of the ego vehicle itself.
        for (int k = 0; k < probes && clear; ++k)
          clear = (path[k] - spec.ego.velocity * (duration * k / (probes - 1))).head<2>().norm() >
                  radius + 3.0;
        if (!clear) continue;
        tracks.push_back(path);
        radii.push_back(radius);
        spec.objects.push_back(obj);
        break;
      }
    }
  };
  place(o.vehicles, ObjectClass::kVehicle);
  place(o.cyclists, ObjectClass::kCyclist);
  place(o.pedestrians, ObjectClass::kPedestrian);
  ValidateSpec(spec);
  return spec;
}

}  // namespace sceneflow
