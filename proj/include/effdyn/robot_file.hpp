#pragma once

// JSON robot description: model parameters plus one configuration.
// Angles are degrees in the file; lengths, masses and inertias are SI.
// Every semantic error names the offending field and its line.

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "effdyn/dynamics.hpp"

namespace effdyn {

struct RobotDescription {
  std::string name;
  RobotModel model;
  /// Base pose (x [m], z [m], pitch [deg]); empty for a fixed base.
  VectorXd base_pose;
  VectorXd joint_angles_deg;

  /// Reduced coordinates y in radians.
  VectorXd configuration() const {
    constexpr double deg = std::numbers::pi / 180.0;
    VectorXd y(base_pose.size() + joint_angles_deg.size());
    y << base_pose, joint_angles_deg * deg;
    if (base_pose.size() == 3)
      y(2) = base_pose(2) * deg;
    return y;
  }
  RobotState state() const { return RobotState::at_rest(model, configuration()); }
};

namespace detail {

using nlohmann::json;

// Input iterator that tracks the line of the last non-blank character it
// handed to the parser.
class LineCountingIterator {
public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char *;
  using reference = const char &;

  struct Cursor {
    int line = 1;
    int last_token_line = 1;
  };

  LineCountingIterator() = default;
  LineCountingIterator(const char *p, std::shared_ptr<Cursor> cur)
      : p_(p), cur_(std::move(cur)) {}

  reference operator*() const { return *p_; }
  LineCountingIterator &operator++() {
    const char c = *p_;
    if (c == '\n')
      ++cur_->line;
    else if (c != ' ' && c != '\t' && c != '\r')
      cur_->last_token_line = cur_->line;
    ++p_;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto old = *this;
    ++*this;
    return old;
  }
  bool operator==(const LineCountingIterator &o) const { return p_ == o.p_; }

private:
  const char *p_ = nullptr;
  std::shared_ptr<Cursor> cur_;
};

// JSON pointer -> line of the value (or of the opening bracket).
using LineMap = std::map<std::string, int>;

inline json parse_with_lines(const std::string &text, LineMap &lines) {
  auto cursor = std::make_shared<LineCountingIterator::Cursor>();
  struct Frame {
    bool array;
    std::string key;
    int index;
  };
  std::vector<Frame> stack;
  auto path = [&stack] {
    std::string p;
    for (const auto &f : stack)
      p += "/" + (f.array ? std::to_string(f.index) : f.key);
    return p;
  };
  auto next_element = [&stack] {
    if (!stack.empty() && stack.back().array)
      ++stack.back().index;
  };

  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json &parsed) {
    switch (ev) {
    case json::parse_event_t::object_start:
    case json::parse_event_t::array_start:
      next_element();
      lines[path()] = cursor->last_token_line;
      stack.push_back({ev == json::parse_event_t::array_start, {}, -1});
      break;
    case json::parse_event_t::object_end:
    case json::parse_event_t::array_end:
      stack.pop_back();
      break;
    case json::parse_event_t::key:
      stack.back().key = parsed.get<std::string>();
      break;
    case json::parse_event_t::value:
      next_element();
      lines[path()] = cursor->last_token_line;
      break;
    }
    return true;
  };

  const char *begin = text.data();
  const char *end = begin + text.size();
  try {
    return json::parse(LineCountingIterator(begin, cursor),
                       LineCountingIterator(end, cursor), cb);
  } catch (const json::parse_error &e) {
    int line = 1;
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < upto; ++i)
      line += text[i] == '\n';
    throw ParseError(line, std::string("malformed JSON: ") + e.what());
  }
}

class DescriptionReader {
public:
  explicit DescriptionReader(LineMap lines) : lines_(std::move(lines)) {}

  int line(const std::string &ptr) const {
    // Fall back to the closest enclosing value that has a line.
    std::string p = ptr;
    while (true) {
      if (auto it = lines_.find(p); it != lines_.end())
        return it->second;
      const auto cut = p.rfind('/');
      if (cut == std::string::npos)
        return 1;
      p.erase(cut);
    }
  }

  [[noreturn]] void fail(const std::string &ptr, const std::string &what) const {
    throw ParseError(line(ptr), display(ptr) + ": " + what);
  }

  const json &object(const json &parent, const std::string &ptr,
                     const std::string &key) const {
    if (!parent.contains(key))
      fail(ptr, "missing field '" + key + "'");
    const auto &v = parent.at(key);
    if (!v.is_object())
      fail(ptr + "/" + key, "expected an object");
    return v;
  }

  const json &array(const json &parent, const std::string &ptr,
                    const std::string &key) const {
    if (!parent.contains(key))
      fail(ptr, "missing field '" + key + "'");
    const auto &v = parent.at(key);
    if (!v.is_array())
      fail(ptr + "/" + key, "expected an array");
    return v;
  }

  std::optional<double> optional_number(const json &parent, const std::string &ptr,
                                        const std::string &key) const {
    if (!parent.contains(key))
      return std::nullopt;
    const auto &v = parent.at(key);
    if (!v.is_number())
      fail(ptr + "/" + key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
      fail(ptr + "/" + key, "must be finite");
    return d;
  }

  double number(const json &parent, const std::string &ptr, const std::string &key) const {
    auto v = optional_number(parent, ptr, key);
    if (!v)
      fail(ptr, "missing field '" + key + "'");
    return *v;
  }

  double positive(const json &parent, const std::string &ptr, const std::string &key) const {
    const double v = number(parent, ptr, key);
    if (!(v > 0.0))
      fail(ptr + "/" + key, "must be positive");
    return v;
  }

  VectorXd vector(const json &parent, const std::string &ptr, const std::string &key,
                  std::optional<Eigen::Index> size) const {
    (void)array(parent, ptr, key);
    return vector_value(parent.at(key), ptr + "/" + key, size);
  }

  VectorXd vector_value(const json &arr, const std::string &here,
                        std::optional<Eigen::Index> size) const {
    if (!arr.is_array())
      fail(here, "expected an array");
    if (size && static_cast<Eigen::Index>(arr.size()) != *size)
      fail(here, "expected " + std::to_string(*size) + " entries, found " +
                     std::to_string(arr.size()));
    VectorXd out(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string at = here + "/" + std::to_string(i);
      if (!arr[i].is_number())
        fail(at, "expected a number");
      out(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
      if (!std::isfinite(out(static_cast<Eigen::Index>(i))))
        fail(at, "must be finite");
    }
    return out;
  }

  // "/links/1/mass" -> "links[1].mass"
  static std::string display(const std::string &ptr) {
    std::string out;
    std::size_t pos = 1;
    while (pos <= ptr.size() && !ptr.empty()) {
      const auto next = ptr.find('/', pos);
      const std::string tok = ptr.substr(pos, next == std::string::npos ? next : next - pos);
      const bool index = !tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos;
      if (index)
        out += "[" + tok + "]";
      else
        out += (out.empty() ? "" : ".") + tok;
      if (next == std::string::npos)
        break;
      pos = next + 1;
    }
    return out.empty() ? "document" : out;
  }

private:
  LineMap lines_;
};

} // namespace detail

/// Parses a description from JSON text. Throws ParseError with the line of
/// the offending value.
inline RobotDescription parse_robot_description(const std::string &text) {
  detail::LineMap lines;
  const auto doc = detail::parse_with_lines(text, lines);
  const detail::DescriptionReader rd(std::move(lines));
  if (!doc.is_object())
    rd.fail("", "expected an object at the top level");

  RobotDescription d;
  if (doc.contains("name")) {
    if (!doc["name"].is_string())
      rd.fail("/name", "expected a string");
    d.name = doc["name"].get<std::string>();
  }

  // Base.
  const auto &base = rd.object(doc, "", "base");
  RobotModel &m = d.model;
  m.base.floating = true;
  if (base.contains("floating")) {
    if (!base["floating"].is_boolean())
      rd.fail("/base/floating", "expected true or false");
    m.base.floating = base["floating"].get<bool>();
  }
  m.base.mass = rd.positive(base, "/base", "mass");
  m.base.side = rd.optional_number(base, "/base", "side").value_or(0.0);
  if (m.base.side < 0.0)
    rd.fail("/base/side", "must be non-negative");
  if (auto inertia = rd.optional_number(base, "/base", "inertia")) {
    if (*inertia < 0.0)
      rd.fail("/base/inertia", "must be non-negative");
    m.base.inertia = *inertia;
  } else {
    m.base.inertia = BaseBody::uniform_square(m.base.mass, m.base.side).inertia;
  }
  m.base.hip = base.contains("hip") ? Vector2d(rd.vector(base, "/base", "hip", 2))
                                    : Vector2d::Zero();

  // Links.
  const auto &links = rd.array(doc, "", "links");
  if (links.empty())
    rd.fail("/links", "at least one link is required");
  const auto n_links = static_cast<int>(links.size());
  for (int i = 0; i < n_links; ++i) {
    const std::string ptr = "/links/" + std::to_string(i);
    if (!links[i].is_object())
      rd.fail(ptr, "expected an object");
    const auto &jl = links[i];
    Link l;
    l.mass = rd.positive(jl, ptr, "mass");
    l.length = rd.positive(jl, ptr, "length");
    l.com = rd.optional_number(jl, ptr, "com").value_or(0.5 * l.length);
    if (l.com < 0.0 || l.com > l.length)
      rd.fail(ptr + "/com", "must lie between 0 and the link length");
    if (auto inertia = rd.optional_number(jl, ptr, "inertia")) {
      if (*inertia < 0.0)
        rd.fail(ptr + "/inertia", "must be non-negative");
      l.inertia = *inertia;
    } else {
      l.inertia = l.mass * l.length * l.length / 12.0;
    }
    if (jl.contains("mount")) {
      if (!jl["mount"].is_number_integer())
        rd.fail(ptr + "/mount", "expected an integer body index (0 = base)");
      const int mount = jl["mount"].get<int>();
      if (mount < 0 || mount > n_links)
        rd.fail(ptr + "/mount", "must name the base (0) or a link (1.." +
                                    std::to_string(n_links) + ")");
      l.mount = mount;
    }
    m.links.push_back(l);
  }

  // Transmissions.
  const auto &trans = rd.array(doc, "", "transmissions");
  if (static_cast<int>(trans.size()) != n_links)
    rd.fail("/transmissions", "expected one transmission per link (" +
                                  std::to_string(n_links) + ")");
  for (int i = 0; i < n_links; ++i) {
    const std::string ptr = "/transmissions/" + std::to_string(i);
    if (!trans[i].is_object())
      rd.fail(ptr, "expected an object");
    const auto &jt = trans[i];
    TransmissionSpec t;
    t.gear_ratio = rd.positive(jt, ptr, "N");
    t.forward_efficiency = rd.number(jt, ptr, "eta_f");
    if (!(t.forward_efficiency > 0.0) || t.forward_efficiency > 1.0)
      rd.fail(ptr + "/eta_f", "must be in (0, 1]");
    t.rotor_inertia = rd.number(jt, ptr, "rotor_inertia");
    if (t.rotor_inertia < 0.0)
      rd.fail(ptr + "/rotor_inertia", "must be non-negative");
    t.torque_limit = rd.positive(jt, ptr, "tau_max");
    m.transmissions.push_back(t);
  }

  // Topology: omitted means serial.
  if (doc.contains("topology")) {
    const auto &rows = rd.array(doc, "", "topology");
    if (static_cast<int>(rows.size()) != n_links)
      rd.fail("/topology", "expected a " + std::to_string(n_links) + "x" +
                               std::to_string(n_links) + " matrix");
    MatrixXd dmat(n_links, n_links);
    for (int r = 0; r < n_links; ++r)
      dmat.row(r) =
          rd.vector_value(rows[r], "/topology/" + std::to_string(r), n_links).transpose();
    try {
      m.topology = ActuationTopology(dmat);
      (void)m.chain();
    } catch (const Error &e) {
      rd.fail("/topology", e.what());
    }
  } else {
    m.topology = ActuationTopology::serial(n_links);
  }

  m.gravity = doc.contains("gravity") ? Vector2d(rd.vector(doc, "", "gravity", 2))
                                      : Vector2d(0.0, -9.81);

  // Configuration.
  const auto &cfg = rd.object(doc, "", "configuration");
  const Eigen::Index nb = m.base_dofs();
  d.base_pose = cfg.contains("q_b") ? rd.vector(cfg, "/configuration", "q_b", nb)
                                    : VectorXd::Zero(nb);
  d.joint_angles_deg = rd.vector(cfg, "/configuration", "q", n_links);

  try {
    m.validate();
  } catch (const Error &e) {
    throw ParseError(1, e.what());
  }
  return d;
}

inline RobotDescription load_robot_description(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError(0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_robot_description(ss.str());
}

inline nlohmann::json to_json(const RobotDescription &d) {
  using nlohmann::json;
  auto vec = [](const auto &v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      a.push_back(v(i));
    return a;
  };
  const RobotModel &m = d.model;
  json doc;
  if (!d.name.empty())
    doc["name"] = d.name;
  doc["base"] = {{"mass", m.base.mass},     {"inertia", m.base.inertia},
                 {"side", m.base.side},     {"hip", vec(m.base.hip)},
                 {"floating", m.base.floating}};
  doc["links"] = json::array();
  for (const auto &l : m.links) {
    json jl = {{"mass", l.mass}, {"length", l.length}, {"com", l.com}, {"inertia", l.inertia}};
    if (l.mount)
      jl["mount"] = *l.mount;
    doc["links"].push_back(jl);
  }
  doc["transmissions"] = json::array();
  for (const auto &t : m.transmissions)
    doc["transmissions"].push_back({{"N", t.gear_ratio},
                                    {"eta_f", t.forward_efficiency},
                                    {"rotor_inertia", t.rotor_inertia},
                                    {"tau_max", t.torque_limit}});
  doc["topology"] = json::array();
  for (Eigen::Index r = 0; r < m.topology.joints(); ++r)
    doc["topology"].push_back(vec(m.topology.matrix().row(r)));
  doc["gravity"] = vec(m.gravity);
  doc["configuration"] = {{"q_b", vec(d.base_pose)}, {"q", vec(d.joint_angles_deg)}};
  return doc;
}

inline std::string serialize_robot_description(const RobotDescription &d) {
  return to_json(d).dump(2) + "\n";
}

} // namespace effdyn
