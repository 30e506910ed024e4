#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "modforge/geometry.hpp"

namespace modforge {

/// Raised when a JSON document does not match the expected schema. Carries
/// the JSON path of the offending element.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

  const std::string& json_path() const { return path_; }

 private:
  std::string path_;
};

struct Violation {
  std::string code;
  std::string path;
  std::string message;
};

/// Raised when a document is well-formed but breaks a semantic invariant
/// (duplicate ids, dangling references, ...).
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& message, std::vector<Violation> violations)
      : std::runtime_error(message), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

enum class Gender { male, female, hermaphroditic };

const char* to_string(Gender g);
Gender gender_from_string(const std::string& s);

/// Reserved connector kinds. "base" connectors attach an assembly to the
/// world, "eef" connectors mark end-effector frames; neither participates
/// in module-to-module matching.
inline constexpr const char* kBaseConnectorKind = "base";
inline constexpr const char* kEefConnectorKind = "eef";

enum class ShapeKind { box, cylinder, sphere, mesh };

const char* to_string(ShapeKind k);
ShapeKind shape_kind_from_string(const std::string& s);

/// Geometric primitive (or mesh-path passthrough) with a pose relative to
/// the owning frame. Box sizes are full extents.
struct Geometry {
  ShapeKind shape = ShapeKind::box;
  Eigen::Vector3d size = Eigen::Vector3d::Zero();  // box
  double radius = 0.0;                             // cylinder, sphere
  double length = 0.0;                             // cylinder
  std::string mesh_path;                           // mesh, relative to asset root
  Transform pose;
};

/// Mating interface on a body. The connector frame's z-axis points away
/// from the module body by convention.
struct Connector {
  std::string id;  // unique within the parent body
  Transform body2connector;
  Gender gender = Gender::hermaphroditic;
  std::string kind;  // free string; "base" and "eef" are reserved
  double size = 0.0;
};

struct Inertia {
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d tensor = Eigen::Matrix3d::Zero();  // about com, body axes
};

struct Body {
  std::string id;  // unique within the module
  Inertia inertia;
  std::optional<Geometry> collision;
  std::optional<Geometry> visual;
  std::vector<Connector> connectors;
};

struct JointLimits {
  double pos_min = 0.0;
  double pos_max = 0.0;
  double vel_max = 0.0;
  double effort_max = 0.0;
};

struct Joint {
  std::string id;  // unique within the module
  JointKind kind = JointKind::revolute;
  std::string parent_body;
  std::string child_body;
  Transform parent2joint;
  Transform joint2child;
  JointLimits limits;
};

/// Reference to a connector inside a module, by body id and connector id.
struct ConnectorRef {
  std::string body_id;
  std::string connector_id;

  auto operator<=>(const ConnectorRef&) const = default;
  std::string qualified() const { return body_id + "/" + connector_id; }
};

/// Atomic building block of a robot: a tree of bodies chained by joints,
/// with connectors as attachment interfaces. Modules never nest.
struct Module {
  std::string id;  // unique within the set
  std::string name;
  std::vector<Body> bodies;
  std::vector<Joint> joints;

  const Body* find_body(const std::string& body_id) const;
  const Joint* find_joint(const std::string& joint_id) const;

  /// Resolves "connectorId" or "bodyId/connectorId". A bare connector id is
  /// accepted only when unique across bodies; throws std::invalid_argument
  /// when ambiguous or absent.
  ConnectorRef resolve_connector(const std::string& ref) const;
  const Connector* find_connector(const ConnectorRef& ref) const;

  std::vector<ConnectorRef> connector_refs() const;

  /// Count of non-fixed joints.
  int dof() const;
};

/// Empty iff all Module invariants hold. Violations are data, not faults.
std::vector<Violation> validate_module(const Module& m);

struct ModuleSet {
  std::string id;
  std::map<std::string, Module> modules;  // keyed by module id
  std::filesystem::path asset_root;

  const Module* find(const std::string& module_id) const;
};

enum class NodeKind { body, joint, connector };

/// Node of a module graph: a body, joint, or connector of one module.
/// Connector names are qualified as "bodyId/connectorId".
struct LocalNode {
  NodeKind kind = NodeKind::body;
  std::string name;

  auto operator<=>(const LocalNode&) const = default;

  static LocalNode body(std::string id) { return {NodeKind::body, std::move(id)}; }
  static LocalNode joint(std::string id) { return {NodeKind::joint, std::move(id)}; }
  static LocalNode connector(const ConnectorRef& ref) {
    return {NodeKind::connector, ref.qualified()};
  }
};

std::string to_string(const LocalNode& node);

/// Directed graph over one module's bodies, joints, and connectors. Every
/// child-parent relation contributes two antiparallel edges whose
/// transitions are mutual inverses.
struct ModuleGraph {
  struct Edge {
    LocalNode to;
    Transform transition;
  };

  std::map<LocalNode, std::vector<Edge>> adjacency;  // edges sorted by target

  std::size_t node_count() const { return adjacency.size(); }
  std::size_t edge_count() const;
};

ModuleGraph build_module_graph(const Module& m);

/// True iff the connectors have equal size (exact), equal kind, and
/// compatible genders (male/female in either order, or hermaphroditic with
/// hermaphroditic). Reserved kinds "base" and "eef" never match.
bool connectors_match(const Connector& a, const Connector& b);

/// Undirected module-set graph: edge (u,v) iff at least one connector pair
/// between u and v matches. Self-loops are kept when a module can attach to
/// another instance of itself.
struct ConnectivityGraph {
  std::vector<std::string> nodes;  // module ids, sorted
  // Keyed by (u,v) with u <= v; each entry lists the matching pairs as
  // (connector of u, connector of v).
  std::map<std::pair<std::string, std::string>,
           std::vector<std::pair<ConnectorRef, ConnectorRef>>>
      edges;

  bool adjacent(const std::string& u, const std::string& v) const;
};

ConnectivityGraph connectivity_graph(const ModuleSet& set);

/// Parses and fully validates a module-set JSON document. Mesh paths are
/// kept as given, relative to asset_root.
ModuleSet parse_module_set(const std::string& text,
                           const std::filesystem::path& asset_root = {});

/// Canonical serialization: sorted keys, 2-space indent, byte-stable.
std::string serialize_module_set(const ModuleSet& set);

}  // namespace modforge
