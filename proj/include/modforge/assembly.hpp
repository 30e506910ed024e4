#pragma once

#include <memory>
#include <optional>

#include "modforge/module_model.hpp"

namespace modforge {

/// A mated pair of connectors joining two module instances. Connector
/// references accept "connectorId" (when unique in the module) or the
/// qualified "bodyId/connectorId" form.
struct Connection {
  std::size_t module_a = 0;
  std::string connector_a;
  std::size_t module_b = 0;
  std::string connector_b;
};

struct BaseDesignation {
  std::size_t instance = 0;
  std::string connector;
};

/// An enumerated tuple of module instances plus the connections between
/// them, with one designated world-attachment connector of kind "base".
/// Immutable after construction; instances are positional, so one module id
/// may appear many times.
class Assembly {
 public:
  /// Validates and builds an assembly. When base is unset, the unique
  /// connector of kind "base" across all instances is designated; zero or
  /// several candidates are an error. Throws std::invalid_argument on any
  /// invariant violation (unknown ids, incompatible or reused connectors,
  /// disconnected composition).
  static Assembly create(std::shared_ptr<const ModuleSet> set,
                         std::vector<std::string> instances,
                         std::vector<Connection> connections,
                         std::optional<BaseDesignation> base = std::nullopt,
                         Pose base_pose = Pose());

  /// Builds a serial chain, resolving for each neighboring pair the unique
  /// matching pair of unused connectors. The first module must expose a
  /// "base" connector and the last an "eef" connector.
  static Assembly from_serial_modules(std::shared_ptr<const ModuleSet> set,
                                      std::vector<std::string> chain,
                                      Pose base_pose = Pose());

  const std::shared_ptr<const ModuleSet>& set() const { return set_; }
  const std::vector<std::string>& instances() const { return instances_; }
  /// Connections with connector references normalized to bodyId/connectorId.
  const std::vector<Connection>& connections() const { return connections_; }
  const BaseDesignation& base() const { return base_; }
  const Pose& base_pose() const { return base_pose_; }

  const Module& module_at(std::size_t instance) const;

  /// Count of non-fixed joints over all instances.
  int degrees_of_freedom() const;

 private:
  Assembly() = default;

  std::shared_ptr<const ModuleSet> set_;
  std::vector<std::string> instances_;
  std::vector<Connection> connections_;
  BaseDesignation base_;
  Pose base_pose_;
};

/// Node of an assembly graph: a module-graph node qualified by instance.
struct AssemblyNode {
  int instance = 0;
  LocalNode local;

  auto operator<=>(const AssemblyNode&) const = default;
};

std::string to_string(const AssemblyNode& node);

/// Undirected per-assembly graph over module instances; one edge per
/// connection, labeled with the connector pair that realizes it.
struct GraphOfModules {
  struct Edge {
    std::size_t u = 0;
    ConnectorRef connector_u;
    std::size_t v = 0;
    ConnectorRef connector_v;
  };

  std::size_t node_count = 0;
  std::vector<Edge> edges;  // same order as Assembly::connections()
};

GraphOfModules graph_of_modules(const Assembly& a);

/// Union of the per-instance module graphs plus, per connection, two
/// antiparallel edges between the mated connector nodes carrying the
/// self-inverse transition R_x(pi).
struct AssemblyGraph {
  struct Edge {
    AssemblyNode to;
    Transform transition;
    bool is_connection = false;
  };

  std::map<AssemblyNode, std::vector<Edge>> adjacency;  // edges sorted by target
  AssemblyNode base_node;

  std::size_t node_count() const { return adjacency.size(); }
  std::size_t directed_edge_count() const;
  std::size_t connection_edge_count() const;
  bool contains(const AssemblyNode& n) const { return adjacency.count(n) != 0; }
};

AssemblyGraph assembly_graph(const Assembly& a);

/// One step of a deterministic breadth-first traversal: the edge by which
/// `successor` was first reached from `node`. Neighbor expansion follows
/// (instance index, node id) order.
struct BfsStep {
  AssemblyNode node;
  const AssemblyGraph::Edge* edge = nullptr;
  AssemblyNode successor;
};

/// Tree edges of a BFS from `root`, in visit order. On cyclic graphs this
/// yields a spanning tree.
std::vector<BfsStep> bfs_steps(const AssemblyGraph& g, const AssemblyNode& root);

/// Product of edge transitions along the BFS shortest path from the base
/// connector node to `target`; identity for the base node itself. Joints
/// contribute their static frames (zero displacement).
Transform frame_placement(const AssemblyGraph& g, const AssemblyNode& target);

/// Placements of every node, keyed by node.
std::map<AssemblyNode, Transform> all_frame_placements(const AssemblyGraph& g);

/// Path product along the BFS shortest path from u to v.
Transform relative_transform(const AssemblyGraph& g, const AssemblyNode& u,
                             const AssemblyNode& v);

/// True iff the undirected reduction (one edge per antiparallel pair) is
/// connected and acyclic.
bool is_tree(const AssemblyGraph& g);

/// Assembly JSON: {"moduleSet", "modules", "connections", "base", "basePose"}.
Assembly parse_assembly(const std::string& text, std::shared_ptr<const ModuleSet> set);
std::string serialize_assembly(const Assembly& a);

}  // namespace modforge
