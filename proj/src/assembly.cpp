#include "modforge/assembly.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace modforge {

using detail::json;

namespace {

ConnectorRef split_qualified(const std::string& qualified) {
  auto slash = qualified.find('/');
  return {qualified.substr(0, slash), qualified.substr(slash + 1)};
}

struct ResolvedEndpoint {
  std::size_t instance;
  ConnectorRef ref;
  const Connector* connector;

  auto key() const { return std::make_pair(instance, ref); }
};

ResolvedEndpoint resolve_endpoint(const ModuleSet& set,
                                  const std::vector<std::string>& instances,
                                  std::size_t instance, const std::string& connector,
                                  const char* side) {
  if (instance >= instances.size()) {
    throw std::invalid_argument("connection references instance " + std::to_string(instance) +
                                " of " + std::to_string(instances.size()));
  }
  const Module* m = set.find(instances[instance]);
  ConnectorRef ref = m->resolve_connector(connector);
  const Connector* c = m->find_connector(ref);
  if (c == nullptr) {
    throw std::invalid_argument(std::string(side) + " connector '" + connector +
                                "' not found in module '" + m->id + "'");
  }
  return {instance, ref, c};
}

}  // namespace

Assembly Assembly::create(std::shared_ptr<const ModuleSet> set,
                          std::vector<std::string> instances,
                          std::vector<Connection> connections,
                          std::optional<BaseDesignation> base, Pose base_pose) {
  if (!set) throw std::invalid_argument("module set is null");
  if (instances.empty()) throw std::invalid_argument("assembly has no instances");
  for (const std::string& id : instances) {
    if (set->find(id) == nullptr) {
      throw std::invalid_argument("unknown module id '" + id + "'");
    }
  }

  std::set<std::pair<std::size_t, ConnectorRef>> used;
  std::vector<Connection> normalized;
  normalized.reserve(connections.size());
  for (const Connection& c : connections) {
    ResolvedEndpoint a = resolve_endpoint(*set, instances, c.module_a, c.connector_a, "first");
    ResolvedEndpoint b = resolve_endpoint(*set, instances, c.module_b, c.connector_b, "second");
    if (a.key() == b.key()) {
      throw std::invalid_argument("connector '" + a.ref.qualified() +
                                  "' cannot mate with itself");
    }
    if (!connectors_match(*a.connector, *b.connector)) {
      throw std::invalid_argument("incompatible connectors: instance " +
                                  std::to_string(a.instance) + " '" + a.ref.qualified() +
                                  "' and instance " + std::to_string(b.instance) + " '" +
                                  b.ref.qualified() + "'");
    }
    for (const ResolvedEndpoint* e : {&a, &b}) {
      if (!used.insert(e->key()).second) {
        throw std::invalid_argument("connector '" + e->ref.qualified() + "' of instance " +
                                    std::to_string(e->instance) +
                                    " is used by multiple connections");
      }
    }
    normalized.push_back({a.instance, a.ref.qualified(), b.instance, b.ref.qualified()});
  }

  BaseDesignation designated;
  if (base) {
    if (base->instance >= instances.size()) {
      throw std::invalid_argument("base designation references instance " +
                                  std::to_string(base->instance));
    }
    const Module* m = set->find(instances[base->instance]);
    ConnectorRef ref = m->resolve_connector(base->connector);
    const Connector* c = m->find_connector(ref);
    if (c->kind != kBaseConnectorKind) {
      throw std::invalid_argument("designated base connector '" + ref.qualified() +
                                  "' has kind '" + c->kind + "', expected 'base'");
    }
    designated = {base->instance, ref.qualified()};
  } else {
    std::vector<BaseDesignation> candidates;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Module* m = set->find(instances[i]);
      for (const ConnectorRef& ref : m->connector_refs()) {
        if (m->find_connector(ref)->kind == kBaseConnectorKind) {
          candidates.push_back({i, ref.qualified()});
        }
      }
    }
    if (candidates.empty()) throw std::invalid_argument("assembly has no base connector");
    if (candidates.size() > 1) {
      throw std::invalid_argument("assembly has " + std::to_string(candidates.size()) +
                                  " base connectors; designate one");
    }
    designated = candidates.front();
  }

  // Connectivity of the graph of modules.
  std::vector<std::vector<std::size_t>> adjacency(instances.size());
  for (const Connection& c : normalized) {
    adjacency[c.module_a].push_back(c.module_b);
    adjacency[c.module_b].push_back(c.module_a);
  }
  std::vector<bool> seen(instances.size(), false);
  std::deque<std::size_t> frontier{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    std::size_t cur = frontier.front();
    frontier.pop_front();
    for (std::size_t next : adjacency[cur]) {
      if (!seen[next]) {
        seen[next] = true;
        ++reached;
        frontier.push_back(next);
      }
    }
  }
  if (reached != instances.size()) {
    throw std::invalid_argument("assembly not connected: " +
                                std::to_string(instances.size() - reached) +
                                " instance(s) unreachable");
  }

  Assembly a;
  a.set_ = std::move(set);
  a.instances_ = std::move(instances);
  a.connections_ = std::move(normalized);
  a.base_ = std::move(designated);
  a.base_pose_ = base_pose;
  return a;
}

Assembly Assembly::from_serial_modules(std::shared_ptr<const ModuleSet> set,
                                       std::vector<std::string> chain, Pose base_pose) {
  if (!set) throw std::invalid_argument("module set is null");
  if (chain.empty()) throw std::invalid_argument("empty module chain");
  for (const std::string& id : chain) {
    if (set->find(id) == nullptr) {
      throw std::invalid_argument("unknown module id '" + id + "'");
    }
  }

  auto kind_connectors = [&](const Module& m, const char* kind) {
    std::vector<ConnectorRef> found;
    for (const ConnectorRef& ref : m.connector_refs()) {
      if (m.find_connector(ref)->kind == kind) found.push_back(ref);
    }
    return found;
  };

  const Module& first = *set->find(chain.front());
  auto base_candidates = kind_connectors(first, kBaseConnectorKind);
  if (base_candidates.size() != 1) {
    throw std::invalid_argument("invalid chain endpoints: first module '" + first.id + "' has " +
                                std::to_string(base_candidates.size()) +
                                " base connectors, expected 1");
  }
  const Module& last = *set->find(chain.back());
  if (kind_connectors(last, kEefConnectorKind).empty()) {
    throw std::invalid_argument("invalid chain endpoints: last module '" + last.id +
                                "' has no eef connector");
  }

  std::set<std::pair<std::size_t, ConnectorRef>> used;
  std::vector<Connection> connections;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const Module& mu = *set->find(chain[i]);
    const Module& mv = *set->find(chain[i + 1]);
    std::vector<std::pair<ConnectorRef, ConnectorRef>> candidates;
    for (const ConnectorRef& cu : mu.connector_refs()) {
      if (used.count({i, cu})) continue;
      for (const ConnectorRef& cv : mv.connector_refs()) {
        if (used.count({i + 1, cv})) continue;
        if (connectors_match(*mu.find_connector(cu), *mv.find_connector(cv))) {
          candidates.emplace_back(cu, cv);
        }
      }
    }
    if (candidates.empty()) {
      throw std::invalid_argument("no connection between chain neighbors " + std::to_string(i) +
                                  " ('" + mu.id + "') and " + std::to_string(i + 1) + " ('" +
                                  mv.id + "')");
    }
    if (candidates.size() > 1) {
      throw std::invalid_argument("ambiguous connection between chain neighbors " +
                                  std::to_string(i) + " ('" + mu.id + "') and " +
                                  std::to_string(i + 1) + " ('" + mv.id + "'): " +
                                  std::to_string(candidates.size()) + " matching pairs");
    }
    const auto& [cu, cv] = candidates.front();
    used.insert({i, cu});
    used.insert({i + 1, cv});
    connections.push_back({i, cu.qualified(), i + 1, cv.qualified()});
  }

  return create(std::move(set), std::move(chain), std::move(connections),
                BaseDesignation{0, base_candidates.front().qualified()}, base_pose);
}

const Module& Assembly::module_at(std::size_t instance) const {
  return *set_->find(instances_.at(instance));
}

int Assembly::degrees_of_freedom() const {
  int n = 0;
  for (std::size_t i = 0; i < instances_.size(); ++i) n += module_at(i).dof();
  return n;
}

std::string to_string(const AssemblyNode& node) {
  return std::to_string(node.instance) + "/" + to_string(node.local);
}

GraphOfModules graph_of_modules(const Assembly& a) {
  GraphOfModules g;
  g.node_count = a.instances().size();
  for (const Connection& c : a.connections()) {
    g.edges.push_back({c.module_a, split_qualified(c.connector_a), c.module_b,
                       split_qualified(c.connector_b)});
  }
  return g;
}

std::size_t AssemblyGraph::directed_edge_count() const {
  std::size_t n = 0;
  for (const auto& [node, edges] : adjacency) n += edges.size();
  return n;
}

std::size_t AssemblyGraph::connection_edge_count() const {
  std::size_t n = 0;
  for (const auto& [node, edges] : adjacency) {
    for (const Edge& e : edges) {
      if (e.is_connection) ++n;
    }
  }
  return n;
}

AssemblyGraph assembly_graph(const Assembly& a) {
  AssemblyGraph g;
  for (std::size_t i = 0; i < a.instances().size(); ++i) {
    ModuleGraph mg = build_module_graph(a.module_at(i));
    for (auto& [local, edges] : mg.adjacency) {
      AssemblyNode from{static_cast<int>(i), local};
      auto& out = g.adjacency[from];
      for (ModuleGraph::Edge& e : edges) {
        out.push_back({{static_cast<int>(i), e.to}, e.transition, false});
      }
    }
  }
  for (const Connection& c : a.connections()) {
    AssemblyNode u{static_cast<int>(c.module_a),
                   LocalNode::connector(split_qualified(c.connector_a))};
    AssemblyNode v{static_cast<int>(c.module_b),
                   LocalNode::connector(split_qualified(c.connector_b))};
    g.adjacency[u].push_back({v, connection_flip(), true});
    g.adjacency[v].push_back({u, connection_flip(), true});
  }
  for (auto& [node, edges] : g.adjacency) {
    std::sort(edges.begin(), edges.end(),
              [](const AssemblyGraph::Edge& x, const AssemblyGraph::Edge& y) { return x.to < y.to; });
  }
  g.base_node = {static_cast<int>(a.base().instance),
                 LocalNode::connector(split_qualified(a.base().connector))};
  return g;
}

std::vector<BfsStep> bfs_steps(const AssemblyGraph& g, const AssemblyNode& root) {
  if (!g.contains(root)) {
    throw std::invalid_argument("unknown graph node '" + to_string(root) + "'");
  }
  std::vector<BfsStep> steps;
  std::set<AssemblyNode> visited{root};
  std::deque<AssemblyNode> frontier{root};
  while (!frontier.empty()) {
    AssemblyNode cur = frontier.front();
    frontier.pop_front();
    for (const AssemblyGraph::Edge& e : g.adjacency.at(cur)) {
      if (visited.insert(e.to).second) {
        steps.push_back({cur, &e, e.to});
        frontier.push_back(e.to);
      }
    }
  }
  return steps;
}

std::map<AssemblyNode, Transform> all_frame_placements(const AssemblyGraph& g) {
  std::map<AssemblyNode, Transform> placements;
  placements[g.base_node] = Transform::identity();
  for (const BfsStep& step : bfs_steps(g, g.base_node)) {
    placements[step.successor] = placements.at(step.node) * step.edge->transition;
  }
  return placements;
}

Transform frame_placement(const AssemblyGraph& g, const AssemblyNode& target) {
  if (!g.contains(target)) {
    throw std::invalid_argument("unknown graph node '" + to_string(target) + "'");
  }
  if (target == g.base_node) return Transform::identity();
  std::map<AssemblyNode, Transform> placements{{g.base_node, Transform::identity()}};
  for (const BfsStep& step : bfs_steps(g, g.base_node)) {
    Transform t = placements.at(step.node) * step.edge->transition;
    if (step.successor == target) return t;
    placements.emplace(step.successor, std::move(t));
  }
  throw std::logic_error("node '" + to_string(target) + "' unreachable from base");
}

Transform relative_transform(const AssemblyGraph& g, const AssemblyNode& u,
                             const AssemblyNode& v) {
  if (!g.contains(v)) {
    throw std::invalid_argument("unknown graph node '" + to_string(v) + "'");
  }
  if (u == v) return Transform::identity();
  std::map<AssemblyNode, Transform> placements{{u, Transform::identity()}};
  for (const BfsStep& step : bfs_steps(g, u)) {
    Transform t = placements.at(step.node) * step.edge->transition;
    if (step.successor == v) return t;
    placements.emplace(step.successor, std::move(t));
  }
  throw std::logic_error("node '" + to_string(v) + "' unreachable from '" + to_string(u) + "'");
}

bool is_tree(const AssemblyGraph& g) {
  if (g.adjacency.empty()) return false;
  std::set<std::pair<AssemblyNode, AssemblyNode>> undirected;
  for (const auto& [from, edges] : g.adjacency) {
    for (const AssemblyGraph::Edge& e : edges) {
      undirected.insert(from < e.to ? std::make_pair(from, e.to) : std::make_pair(e.to, from));
    }
  }
  if (undirected.size() + 1 != g.node_count()) return false;
  return bfs_steps(g, g.adjacency.begin()->first).size() + 1 == g.node_count();
}

Assembly parse_assembly(const std::string& text, std::shared_ptr<const ModuleSet> set) {
  if (!set) throw std::invalid_argument("module set is null");
  const json doc = detail::parse_document(text);
  const std::string set_id = detail::require_string(doc, "", "moduleSet");
  if (set_id != set->id) {
    throw ParseError("/moduleSet",
                     "document references module set '" + set_id + "', loaded set is '" +
                         set->id + "'");
  }
  std::vector<std::string> instances;
  const json& modules = detail::require_array(doc, "", "modules");
  for (std::size_t i = 0; i < modules.size(); ++i) {
    if (!modules[i].is_string()) {
      throw ParseError("/modules/" + std::to_string(i), "expected a module id string");
    }
    instances.push_back(modules[i].get<std::string>());
  }
  std::vector<Connection> connections;
  const json& conns = detail::require_array(doc, "", "connections");
  for (std::size_t i = 0; i < conns.size(); ++i) {
    const json& c = conns[i];
    const std::string path = "/connections/" + std::to_string(i);
    if (!c.is_array() || c.size() != 4 || !c[0].is_number_unsigned() ||
        !c[1].is_string() || !c[2].is_number_unsigned() || !c[3].is_string()) {
      throw ParseError(path, "expected [instanceIdx, connectorId, instanceIdx, connectorId]");
    }
    connections.push_back({c[0].get<std::size_t>(), c[1].get<std::string>(),
                           c[2].get<std::size_t>(), c[3].get<std::string>()});
  }
  std::optional<BaseDesignation> base;
  if (auto it = doc.find("base"); it != doc.end()) {
    const json& b = *it;
    if (!b.is_array() || b.size() != 2 || !b[0].is_number_unsigned() || !b[1].is_string()) {
      throw ParseError("/base", "expected [instanceIdx, connectorId]");
    }
    base = BaseDesignation{b[0].get<std::size_t>(), b[1].get<std::string>()};
  }
  Pose base_pose;
  if (auto it = doc.find("basePose"); it != doc.end()) {
    base_pose = detail::parse_transform(*it, "/basePose");
  }
  try {
    return Assembly::create(std::move(set), std::move(instances), std::move(connections),
                            std::move(base), base_pose);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("invalid assembly: ") + e.what(),
                          {{"invalid-assembly", "", e.what()}});
  }
}

std::string serialize_assembly(const Assembly& a) {
  json doc;
  doc["moduleSet"] = a.set()->id;
  doc["modules"] = a.instances();
  json conns = json::array();
  for (const Connection& c : a.connections()) {
    conns.push_back({c.module_a, c.connector_a, c.module_b, c.connector_b});
  }
  doc["connections"] = conns;
  doc["base"] = {a.base().instance, a.base().connector};
  doc["basePose"] = detail::transform_to_json(a.base_pose());
  return doc.dump(2) + "\n";
}

}  // namespace modforge
