#include "modforge/module_model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace modforge {

using detail::json;

const char* to_string(Gender g) {
  switch (g) {
    case Gender::male:
      return "male";
    case Gender::female:
      return "female";
    case Gender::hermaphroditic:
      return "hermaphroditic";
  }
  return "?";
}

Gender gender_from_string(const std::string& s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  if (s == "hermaphroditic") return Gender::hermaphroditic;
  throw std::invalid_argument("unknown gender: " + s);
}

const char* to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::box:
      return "box";
    case ShapeKind::cylinder:
      return "cylinder";
    case ShapeKind::sphere:
      return "sphere";
    case ShapeKind::mesh:
      return "mesh";
  }
  return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "box") return ShapeKind::box;
  if (s == "cylinder") return ShapeKind::cylinder;
  if (s == "sphere") return ShapeKind::sphere;
  if (s == "mesh") return ShapeKind::mesh;
  throw std::invalid_argument("unknown shape: " + s);
}

const Body* Module::find_body(const std::string& body_id) const {
  for (const Body& b : bodies) {
    if (b.id == body_id) return &b;
  }
  return nullptr;
}

const Joint* Module::find_joint(const std::string& joint_id) const {
  for (const Joint& j : joints) {
    if (j.id == joint_id) return &j;
  }
  return nullptr;
}

ConnectorRef Module::resolve_connector(const std::string& ref) const {
  auto slash = ref.find('/');
  if (slash != std::string::npos) {
    ConnectorRef r{ref.substr(0, slash), ref.substr(slash + 1)};
    if (find_connector(r) == nullptr) {
      throw std::invalid_argument("module '" + id + "' has no connector '" + ref + "'");
    }
    return r;
  }
  std::optional<ConnectorRef> found;
  for (const Body& b : bodies) {
    for (const Connector& c : b.connectors) {
      if (c.id == ref) {
        if (found) {
          throw std::invalid_argument("connector reference '" + ref + "' is ambiguous in module '" +
                                      id + "'; qualify as bodyId/connectorId");
        }
        found = ConnectorRef{b.id, c.id};
      }
    }
  }
  if (!found) {
    throw std::invalid_argument("module '" + id + "' has no connector '" + ref + "'");
  }
  return *found;
}

const Connector* Module::find_connector(const ConnectorRef& ref) const {
  const Body* b = find_body(ref.body_id);
  if (b == nullptr) return nullptr;
  for (const Connector& c : b->connectors) {
    if (c.id == ref.connector_id) return &c;
  }
  return nullptr;
}

std::vector<ConnectorRef> Module::connector_refs() const {
  std::vector<ConnectorRef> refs;
  for (const Body& b : bodies) {
    for (const Connector& c : b.connectors) {
      refs.push_back({b.id, c.id});
    }
  }
  std::sort(refs.begin(), refs.end());
  return refs;
}

int Module::dof() const {
  int n = 0;
  for (const Joint& j : joints) {
    if (j.kind != JointKind::fixed) ++n;
  }
  return n;
}

const Module* ModuleSet::find(const std::string& module_id) const {
  auto it = modules.find(module_id);
  return it == modules.end() ? nullptr : &it->second;
}

std::string to_string(const LocalNode& node) {
  const char* prefix = node.kind == NodeKind::body      ? "b:"
                       : node.kind == NodeKind::joint   ? "j:"
                                                        : "c:";
  return prefix + node.name;
}

std::size_t ModuleGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [node, edges] : adjacency) n += edges.size();
  return n;
}

namespace {

void check_geometry(const Geometry& g, const std::string& path, std::vector<Violation>& out) {
  switch (g.shape) {
    case ShapeKind::box:
      if (g.size.minCoeff() <= 0.0) {
        out.push_back({"bad-geometry", path, "box extents must be positive"});
      }
      break;
    case ShapeKind::cylinder:
      if (g.radius <= 0.0 || g.length <= 0.0) {
        out.push_back({"bad-geometry", path, "cylinder radius and length must be positive"});
      }
      break;
    case ShapeKind::sphere:
      if (g.radius <= 0.0) {
        out.push_back({"bad-geometry", path, "sphere radius must be positive"});
      }
      break;
    case ShapeKind::mesh:
      if (g.mesh_path.empty()) {
        out.push_back({"bad-geometry", path, "mesh path must not be empty"});
      }
      break;
  }
}

}  // namespace

std::vector<Violation> validate_module(const Module& m) {
  std::vector<Violation> out;
  const std::string base = "modules/" + m.id;

  if (m.bodies.empty()) {
    out.push_back({"no-bodies", base, "module must contain at least one body"});
    return out;
  }

  std::set<std::string> body_ids;
  std::size_t connector_count = 0;
  for (const Body& b : m.bodies) {
    const std::string bpath = base + "/bodies/" + b.id;
    if (!body_ids.insert(b.id).second) {
      out.push_back({"duplicate-id", bpath, "duplicate body id"});
    }
    if (b.inertia.mass < 0.0) {
      out.push_back({"negative-mass", bpath, "mass must be non-negative"});
    }
    if ((b.inertia.tensor - b.inertia.tensor.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      out.push_back({"asymmetric-inertia", bpath, "inertia tensor must be symmetric"});
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(b.inertia.tensor);
      if (eig.eigenvalues().minCoeff() < -1e-12) {
        out.push_back({"negative-inertia", bpath, "principal moments must be non-negative"});
      }
    }
    if (b.collision) check_geometry(*b.collision, bpath + "/collision", out);
    if (b.visual) check_geometry(*b.visual, bpath + "/visual", out);

    std::set<std::string> conn_ids;
    for (const Connector& c : b.connectors) {
      const std::string cpath = bpath + "/connectors/" + c.id;
      if (!conn_ids.insert(c.id).second) {
        out.push_back({"duplicate-id", cpath, "duplicate connector id within body"});
      }
      if (c.size <= 0.0) {
        out.push_back({"bad-connector-size", cpath, "connector size must be positive"});
      }
      ++connector_count;
    }
  }
  if (connector_count == 0) {
    out.push_back({"no-connectors", base, "module must expose at least one connector"});
  }

  std::set<std::string> joint_ids;
  // Body adjacency induced by joints, for the tree check.
  std::map<std::string, std::vector<std::string>> adjacency;
  std::size_t usable_joints = 0;
  for (const Joint& j : m.joints) {
    const std::string jpath = base + "/joints/" + j.id;
    if (!joint_ids.insert(j.id).second) {
      out.push_back({"duplicate-id", jpath, "duplicate joint id"});
    }
    bool refs_ok = true;
    if (j.parent_body == j.child_body) {
      out.push_back({"self-loop-joint", jpath, "joint must connect two distinct bodies"});
      refs_ok = false;
    }
    for (const std::string* ref : {&j.parent_body, &j.child_body}) {
      if (body_ids.find(*ref) == body_ids.end()) {
        out.push_back({"dangling-body-ref", jpath,
                       "module '" + m.id + "' joint '" + j.id + "' references unknown body '" +
                           *ref + "'"});
        refs_ok = false;
      }
    }
    if (j.kind != JointKind::fixed) {
      if (j.limits.pos_min > j.limits.pos_max || j.limits.vel_max <= 0.0 ||
          j.limits.effort_max <= 0.0) {
        out.push_back({"bad-limits", jpath,
                       "require pos min <= max, velocity > 0 and effort > 0"});
      }
    }
    if (refs_ok) {
      adjacency[j.parent_body].push_back(j.child_body);
      adjacency[j.child_body].push_back(j.parent_body);
      ++usable_joints;
    }
  }

  // Tree check: connected and acyclic over bodies.
  if (usable_joints == m.joints.size()) {
    std::set<std::string> seen;
    std::queue<std::string> frontier;
    frontier.push(m.bodies.front().id);
    seen.insert(m.bodies.front().id);
    while (!frontier.empty()) {
      std::string cur = frontier.front();
      frontier.pop();
      for (const std::string& next : adjacency[cur]) {
        if (seen.insert(next).second) frontier.push(next);
      }
    }
    if (seen.size() != m.bodies.size()) {
      out.push_back({"disconnected-bodies", base, "joints do not connect all bodies"});
    } else if (usable_joints + 1 != m.bodies.size()) {
      out.push_back({"intra-module-cycle", base, "joints form a cycle over bodies"});
    }
  }

  return out;
}

ModuleGraph build_module_graph(const Module& m) {
  ModuleGraph g;
  auto add_pair = [&g](const LocalNode& u, const LocalNode& v, const Transform& t) {
    g.adjacency[u].push_back({v, t});
    g.adjacency[v].push_back({u, t.inverse()});
  };

  for (const Body& b : m.bodies) {
    g.adjacency[LocalNode::body(b.id)];
    for (const Connector& c : b.connectors) {
      add_pair(LocalNode::body(b.id), LocalNode::connector({b.id, c.id}), c.body2connector);
    }
  }
  for (const Joint& j : m.joints) {
    add_pair(LocalNode::body(j.parent_body), LocalNode::joint(j.id), j.parent2joint);
    add_pair(LocalNode::joint(j.id), LocalNode::body(j.child_body), j.joint2child);
  }

  for (auto& [node, edges] : g.adjacency) {
    std::sort(edges.begin(), edges.end(),
              [](const ModuleGraph::Edge& a, const ModuleGraph::Edge& b) { return a.to < b.to; });
  }
  return g;
}

bool connectors_match(const Connector& a, const Connector& b) {
  for (const Connector* c : {&a, &b}) {
    if (c->kind == kBaseConnectorKind || c->kind == kEefConnectorKind) return false;
  }
  if (a.size != b.size || a.kind != b.kind) return false;
  if (a.gender == Gender::hermaphroditic || b.gender == Gender::hermaphroditic) {
    return a.gender == b.gender;
  }
  return a.gender != b.gender;
}

bool ConnectivityGraph::adjacent(const std::string& u, const std::string& v) const {
  auto key = u <= v ? std::make_pair(u, v) : std::make_pair(v, u);
  return edges.find(key) != edges.end();
}

ConnectivityGraph connectivity_graph(const ModuleSet& set) {
  ConnectivityGraph g;
  for (const auto& [id, module] : set.modules) g.nodes.push_back(id);

  for (auto ui = set.modules.begin(); ui != set.modules.end(); ++ui) {
    for (auto vi = ui; vi != set.modules.end(); ++vi) {
      const Module& mu = ui->second;
      const Module& mv = vi->second;
      std::vector<std::pair<ConnectorRef, ConnectorRef>> pairs;
      auto refs_u = mu.connector_refs();
      auto refs_v = mv.connector_refs();
      for (std::size_t i = 0; i < refs_u.size(); ++i) {
        // For a self-pairing (two instances of one module) unordered pairs
        // suffice; matching is symmetric.
        std::size_t j0 = (ui == vi) ? i : 0;
        for (std::size_t j = j0; j < refs_v.size(); ++j) {
          const Connector* cu = mu.find_connector(refs_u[i]);
          const Connector* cv = mv.find_connector(refs_v[j]);
          if (connectors_match(*cu, *cv)) {
            pairs.emplace_back(refs_u[i], refs_v[j]);
          }
        }
      }
      if (!pairs.empty()) {
        g.edges[{ui->first, vi->first}] = std::move(pairs);
      }
    }
  }
  return g;
}

namespace {

using detail::geometry_to_json;
using detail::parse_geometry;
using detail::parse_transform;
using detail::require_array;
using detail::require_field;
using detail::require_number;
using detail::require_string;
using detail::transform_to_json;

Connector parse_connector(const json& j, const std::string& path) {
  Connector c;
  c.id = require_string(j, path, "id");
  c.body2connector = parse_transform(require_array(j, path, "pose", 16), path + "/pose");
  const std::string gender = require_string(j, path, "gender");
  try {
    c.gender = gender_from_string(gender);
  } catch (const std::invalid_argument&) {
    throw ParseError(path + "/gender", "must be one of male, female, hermaphroditic");
  }
  c.kind = require_string(j, path, "type");
  c.size = require_number(j, path, "size");
  return c;
}

Body parse_body(const json& j, const std::string& path) {
  Body b;
  b.id = require_string(j, path, "id");
  b.inertia.mass = require_number(j, path, "mass");
  const json& com = require_array(j, path, "com", 3);
  for (int i = 0; i < 3; ++i) b.inertia.com[i] = detail::number_at(com, path + "/com", i);
  const json& tensor = require_array(j, path, "inertia", 9);
  for (int i = 0; i < 9; ++i) {
    b.inertia.tensor(i / 3, i % 3) = detail::number_at(tensor, path + "/inertia", i);
  }
  if (auto it = j.find("collision"); it != j.end()) {
    b.collision = parse_geometry(*it, path + "/collision");
  }
  if (auto it = j.find("visual"); it != j.end()) {
    b.visual = parse_geometry(*it, path + "/visual");
  }
  const json& conns = require_array(j, path, "connectors");
  for (std::size_t i = 0; i < conns.size(); ++i) {
    b.connectors.push_back(parse_connector(conns[i], path + "/connectors/" + std::to_string(i)));
  }
  return b;
}

Joint parse_joint(const json& j, const std::string& path) {
  Joint out;
  out.id = require_string(j, path, "id");
  const std::string kind = require_string(j, path, "kind");
  try {
    out.kind = joint_kind_from_string(kind);
  } catch (const std::invalid_argument&) {
    throw ParseError(path + "/kind", "must be one of revolute, prismatic, fixed");
  }
  out.parent_body = require_string(j, path, "parent");
  out.child_body = require_string(j, path, "child");
  out.parent2joint = parse_transform(require_array(j, path, "parent2joint", 16), path + "/parent2joint");
  out.joint2child = parse_transform(require_array(j, path, "joint2child", 16), path + "/joint2child");
  if (out.kind != JointKind::fixed || j.find("limits") != j.end()) {
    const json& lim = require_field(j, path, "limits");
    const std::string lpath = path + "/limits";
    const json& pos = require_array(lim, lpath, "pos", 2);
    out.limits.pos_min = detail::number_at(pos, lpath + "/pos", 0);
    out.limits.pos_max = detail::number_at(pos, lpath + "/pos", 1);
    out.limits.vel_max = require_number(lim, lpath, "vel");
    out.limits.effort_max = require_number(lim, lpath, "effort");
  }
  return out;
}

Module parse_module(const json& j, const std::string& path) {
  Module m;
  m.id = require_string(j, path, "id");
  m.name = require_string(j, path, "name");
  const json& bodies = require_array(j, path, "bodies");
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    m.bodies.push_back(parse_body(bodies[i], path + "/bodies/" + std::to_string(i)));
  }
  const json& joints = require_array(j, path, "joints");
  for (std::size_t i = 0; i < joints.size(); ++i) {
    m.joints.push_back(parse_joint(joints[i], path + "/joints/" + std::to_string(i)));
  }
  return m;
}

json connector_to_json(const Connector& c) {
  json j;
  j["id"] = c.id;
  j["pose"] = transform_to_json(c.body2connector);
  j["gender"] = to_string(c.gender);
  j["type"] = c.kind;
  j["size"] = c.size;
  return j;
}

json body_to_json(const Body& b) {
  json j;
  j["id"] = b.id;
  j["mass"] = b.inertia.mass;
  j["com"] = {b.inertia.com[0], b.inertia.com[1], b.inertia.com[2]};
  json tensor = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) tensor.push_back(b.inertia.tensor(r, c));
  }
  j["inertia"] = tensor;
  if (b.collision) j["collision"] = geometry_to_json(*b.collision);
  if (b.visual) j["visual"] = geometry_to_json(*b.visual);
  json conns = json::array();
  for (const Connector& c : b.connectors) conns.push_back(connector_to_json(c));
  j["connectors"] = conns;
  return j;
}

json joint_to_json(const Joint& jt) {
  json j;
  j["id"] = jt.id;
  j["kind"] = to_string(jt.kind);
  j["parent"] = jt.parent_body;
  j["child"] = jt.child_body;
  j["parent2joint"] = transform_to_json(jt.parent2joint);
  j["joint2child"] = transform_to_json(jt.joint2child);
  json lim;
  lim["pos"] = {jt.limits.pos_min, jt.limits.pos_max};
  lim["vel"] = jt.limits.vel_max;
  lim["effort"] = jt.limits.effort_max;
  j["limits"] = lim;
  return j;
}

}  // namespace

ModuleSet parse_module_set(const std::string& text, const std::filesystem::path& asset_root) {
  const json doc = detail::parse_document(text);
  ModuleSet set;
  set.id = require_string(doc, "", "id");
  set.asset_root = asset_root;
  const json& modules = require_array(doc, "", "modules");
  std::vector<Violation> violations;
  for (std::size_t i = 0; i < modules.size(); ++i) {
    Module m = parse_module(modules[i], "/modules/" + std::to_string(i));
    for (Violation& v : validate_module(m)) violations.push_back(std::move(v));
    if (!set.modules.emplace(m.id, std::move(m)).second) {
      violations.push_back({"duplicate-id", "/modules/" + std::to_string(i),
                            "duplicate module id '" + modules[i].value("id", "") + "'"});
    }
  }
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "module set validation failed:";
    for (const Violation& v : violations) {
      msg << "\n  [" << v.code << "] " << v.path << ": " << v.message;
    }
    throw ValidationError(msg.str(), std::move(violations));
  }
  return set;
}

std::string serialize_module_set(const ModuleSet& set) {
  json doc;
  doc["id"] = set.id;
  json modules = json::array();
  for (const auto& [id, m] : set.modules) {
    json mj;
    mj["id"] = m.id;
    mj["name"] = m.name;
    json bodies = json::array();
    for (const Body& b : m.bodies) bodies.push_back(body_to_json(b));
    mj["bodies"] = bodies;
    json joints = json::array();
    for (const Joint& jt : m.joints) joints.push_back(joint_to_json(jt));
    mj["joints"] = joints;
    modules.push_back(mj);
  }
  doc["modules"] = modules;
  return doc.dump(2) + "\n";
}

}  // namespace modforge
