#include "modforge/urdf.hpp"

#include <Eigen/Geometry>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace modforge {

const UrdfLink* UrdfDocument::find_link(const std::string& link_name) const {
  for (const UrdfLink& l : links) {
    if (l.name == link_name) return &l;
  }
  return nullptr;
}

const UrdfJoint* UrdfDocument::find_joint(const std::string& joint_name) const {
  for (const UrdfJoint& j : joints) {
    if (j.name == joint_name) return &j;
  }
  return nullptr;
}

const UrdfLink* UrdfDocument::root_link() const {
  std::set<std::string> children;
  for (const UrdfJoint& j : joints) children.insert(j.child);
  for (const UrdfLink& l : links) {
    if (children.find(l.name) == children.end()) return &l;
  }
  return nullptr;
}

namespace {

struct SplitName {
  std::string body;
  std::string connector;
};

SplitName split_connector_name(const std::string& qualified) {
  auto slash = qualified.find('/');
  return {qualified.substr(0, slash), qualified.substr(slash + 1)};
}

std::string link_name_for(int instance, const std::string& body_id) {
  return std::to_string(instance) + "_" + body_id;
}

/// Picks "<instance>_<connectorId>", qualifying with the body id when the
/// plain form is already taken (connector ids are only unique per body).
std::string connector_element_name(std::set<std::string>& taken, int instance,
                                   const SplitName& conn) {
  std::string plain = std::to_string(instance) + "_" + conn.connector;
  if (taken.insert(plain).second) return plain;
  std::string qualified = std::to_string(instance) + "_" + conn.body + "_" + conn.connector;
  taken.insert(qualified);
  return qualified;
}

UrdfLink make_link(const Assembly& a, const AssemblyNode& node, const Transform& offset) {
  const Module& m = a.module_at(static_cast<std::size_t>(node.instance));
  const Body& b = *m.find_body(node.local.name);
  UrdfLink link;
  link.name = link_name_for(node.instance, b.id);
  link.inertial.mass = b.inertia.mass;
  link.inertial.origin = offset * Transform::translate(b.inertia.com);
  link.inertial.inertia = b.inertia.tensor;
  for (const std::optional<Geometry> Body::*field : {&Body::visual, &Body::collision}) {
    if (const auto& geom = b.*field) {
      Geometry g = *geom;
      g.pose = offset * g.pose;
      (field == &Body::visual ? link.visuals : link.collisions).push_back(std::move(g));
    }
  }
  return link;
}

}  // namespace

UrdfDocument generate_urdf(const Assembly& a, const std::string& name) {
  AssemblyGraph g = assembly_graph(a);
  if (!is_tree(g)) {
    throw std::invalid_argument(
        "assembly graph contains a cycle: closed-chain kinematics not supported by URDF");
  }

  UrdfDocument doc;
  doc.name = name;

  // Transform from the frame of the most recently emitted URDF element
  // (joint or link root) to each visited node's frame.
  std::map<AssemblyNode, Transform> running{{g.base_node, Transform::identity()}};
  // URDF link owning each visited node's subtree.
  std::map<AssemblyNode, std::string> link_of;
  std::set<std::string> taken_names;

  // Root link: the body owning the base connector, placed relative to it.
  {
    const SplitName base_conn = split_connector_name(g.base_node.local.name);
    link_of[g.base_node] = link_name_for(g.base_node.instance, base_conn.body);
  }

  for (const BfsStep& step : bfs_steps(g, g.base_node)) {
    const AssemblyNode& n = step.node;
    const AssemblyNode& s = step.successor;
    Transform t_s = running.at(n) * step.edge->transition;

    if (s.local.kind == NodeKind::body) {
      doc.links.push_back(make_link(a, s, t_s));
      link_of[s] = doc.links.back().name;
      taken_names.insert(doc.links.back().name);
    } else if (s.local.kind == NodeKind::joint) {
      const Module& m = a.module_at(static_cast<std::size_t>(s.instance));
      const Joint& j = *m.find_joint(s.local.name);
      const bool forward = n.local.name == j.parent_body;
      UrdfJoint uj;
      uj.name = std::to_string(s.instance) + "_" + j.id;
      uj.kind = j.kind;
      uj.parent = link_of.at(n);
      uj.child = link_name_for(s.instance, forward ? j.child_body : j.parent_body);
      uj.origin = t_s;
      uj.axis = Eigen::Vector3d(0, 0, forward ? 1.0 : -1.0);
      if (j.kind != JointKind::fixed) uj.limits = j.limits;
      doc.joints.push_back(std::move(uj));
      t_s = Transform::identity();
    } else if (step.edge->is_connection) {
      // Crossing to the mated connector: one fixed joint per connection.
      const SplitName conn = split_connector_name(s.local.name);
      UrdfJoint uj;
      uj.name = connector_element_name(taken_names, s.instance, conn);
      uj.kind = JointKind::fixed;
      uj.parent = link_of.at(n);
      uj.child = link_name_for(s.instance, conn.body);
      uj.origin = t_s;
      doc.joints.push_back(std::move(uj));
      t_s = Transform::identity();
    } else {
      // A connector reached from its own body. Unconnected "eef" connectors
      // terminate in a fixed joint to a near-massless link; other loose
      // connectors stay internal interfaces.
      const Module& m = a.module_at(static_cast<std::size_t>(s.instance));
      const SplitName conn = split_connector_name(s.local.name);
      const Connector& c = *m.find_connector({conn.body, conn.connector});
      const bool connected = g.adjacency.at(s).size() > 1;
      if (!connected && c.kind == kEefConnectorKind) {
        UrdfJoint uj;
        uj.name = connector_element_name(taken_names, s.instance, conn);
        uj.kind = JointKind::fixed;
        uj.parent = link_of.at(n);
        uj.child = uj.name + "_link";
        uj.origin = t_s;
        UrdfLink terminal;
        terminal.name = uj.child;
        terminal.inertial.mass = 1e-9;
        terminal.inertial.inertia = Eigen::Matrix3d::Identity() * 1e-12;
        doc.joints.push_back(std::move(uj));
        doc.links.push_back(std::move(terminal));
        link_of[s] = doc.links.back().name;
        t_s = Transform::identity();
      } else {
        link_of[s] = link_of.at(n);
      }
    }

    if (link_of.find(s) == link_of.end()) {
      // Joints and mated connectors hand ownership to the upcoming child link.
      link_of[s] = std::string();
    }
    running[s] = t_s;
  }

  return doc;
}

namespace {

std::string fmt(double v) {
  if (v == 0.0) return "0";  // normalizes -0
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt3(const Eigen::Vector3d& v) {
  return fmt(v[0]) + " " + fmt(v[1]) + " " + fmt(v[2]);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_origin(std::ostream& os, const std::string& indent, const Transform& t) {
  os << indent << "<origin xyz=\"" << fmt3(t.translation()) << "\" rpy=\""
     << fmt3(rpy_from_rotation(t.rotation())) << "\"/>\n";
}

void write_geometry(std::ostream& os, const std::string& indent, const char* tag,
                    const Geometry& g) {
  os << indent << "<" << tag << ">\n";
  write_origin(os, indent + "  ", g.pose);
  os << indent << "  <geometry>\n";
  switch (g.shape) {
    case ShapeKind::box:
      os << indent << "    <box size=\"" << fmt3(g.size) << "\"/>\n";
      break;
    case ShapeKind::cylinder:
      os << indent << "    <cylinder radius=\"" << fmt(g.radius) << "\" length=\""
         << fmt(g.length) << "\"/>\n";
      break;
    case ShapeKind::sphere:
      os << indent << "    <sphere radius=\"" << fmt(g.radius) << "\"/>\n";
      break;
    case ShapeKind::mesh:
      os << indent << "    <mesh filename=\"" << xml_escape(g.mesh_path) << "\"/>\n";
      break;
  }
  os << indent << "  </geometry>\n";
  os << indent << "</" << tag << ">\n";
}

}  // namespace

std::string write_xml(const UrdfDocument& doc) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\"?>\n";
  os << "<robot name=\"" << xml_escape(doc.name) << "\">\n";
  for (const UrdfLink& l : doc.links) {
    os << "  <link name=\"" << xml_escape(l.name) << "\">\n";
    os << "    <inertial>\n";
    write_origin(os, "      ", l.inertial.origin);
    os << "      <mass value=\"" << fmt(l.inertial.mass) << "\"/>\n";
    const Eigen::Matrix3d& i = l.inertial.inertia;
    os << "      <inertia ixx=\"" << fmt(i(0, 0)) << "\" ixy=\"" << fmt(i(0, 1)) << "\" ixz=\""
       << fmt(i(0, 2)) << "\" iyy=\"" << fmt(i(1, 1)) << "\" iyz=\"" << fmt(i(1, 2))
       << "\" izz=\"" << fmt(i(2, 2)) << "\"/>\n";
    os << "    </inertial>\n";
    for (const Geometry& g : l.visuals) write_geometry(os, "    ", "visual", g);
    for (const Geometry& g : l.collisions) write_geometry(os, "    ", "collision", g);
    os << "  </link>\n";
  }
  for (const UrdfJoint& j : doc.joints) {
    os << "  <joint name=\"" << xml_escape(j.name) << "\" type=\"" << to_string(j.kind)
       << "\">\n";
    write_origin(os, "    ", j.origin);
    os << "    <parent link=\"" << xml_escape(j.parent) << "\"/>\n";
    os << "    <child link=\"" << xml_escape(j.child) << "\"/>\n";
    if (j.kind != JointKind::fixed) {
      os << "    <axis xyz=\"" << fmt3(j.axis) << "\"/>\n";
      if (j.limits) {
        os << "    <limit lower=\"" << fmt(j.limits->pos_min) << "\" upper=\""
           << fmt(j.limits->pos_max) << "\" velocity=\"" << fmt(j.limits->vel_max)
           << "\" effort=\"" << fmt(j.limits->effort_max) << "\"/>\n";
      }
    }
    os << "  </joint>\n";
  }
  os << "</robot>\n";
  return os.str();
}

namespace {

namespace pt = boost::property_tree;

Eigen::Vector3d parse_vec3(const std::string& text, const std::string& path) {
  std::istringstream is(text);
  Eigen::Vector3d v;
  if (!(is >> v[0] >> v[1] >> v[2])) {
    throw ParseError(path, "expected three numbers, got '" + text + "'");
  }
  return v;
}

Transform parse_origin(const pt::ptree& element, const std::string& path) {
  auto origin = element.get_child_optional("origin");
  if (!origin) return Transform::identity();
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
  if (auto s = origin->get_optional<std::string>("<xmlattr>.xyz")) {
    xyz = parse_vec3(*s, path + "/origin.xyz");
  }
  if (auto s = origin->get_optional<std::string>("<xmlattr>.rpy")) {
    rpy = parse_vec3(*s, path + "/origin.rpy");
  }
  return Transform(rotation_from_rpy(rpy[0], rpy[1], rpy[2]), xyz);
}

Geometry parse_urdf_geometry(const pt::ptree& element, const std::string& path) {
  Geometry g;
  g.pose = parse_origin(element, path);
  auto geom = element.get_child_optional("geometry");
  if (!geom) throw ParseError(path, "missing <geometry>");
  if (auto box = geom->get_child_optional("box")) {
    g.shape = ShapeKind::box;
    g.size = parse_vec3(box->get<std::string>("<xmlattr>.size", "0 0 0"), path + "/box.size");
  } else if (auto cyl = geom->get_child_optional("cylinder")) {
    g.shape = ShapeKind::cylinder;
    g.radius = cyl->get<double>("<xmlattr>.radius", 0.0);
    g.length = cyl->get<double>("<xmlattr>.length", 0.0);
  } else if (auto sph = geom->get_child_optional("sphere")) {
    g.shape = ShapeKind::sphere;
    g.radius = sph->get<double>("<xmlattr>.radius", 0.0);
  } else if (auto mesh = geom->get_child_optional("mesh")) {
    g.shape = ShapeKind::mesh;
    g.mesh_path = mesh->get<std::string>("<xmlattr>.filename", "");
  } else {
    throw ParseError(path, "unsupported geometry primitive");
  }
  return g;
}

UrdfLink parse_link(const pt::ptree& element, const std::string& path) {
  UrdfLink link;
  auto name = element.get_optional<std::string>("<xmlattr>.name");
  if (!name) throw ParseError(path, "link is missing a name");
  link.name = *name;
  if (auto inertial = element.get_child_optional("inertial")) {
    link.inertial.origin = parse_origin(*inertial, path + "/inertial");
    link.inertial.mass = inertial->get<double>("mass.<xmlattr>.value", 0.0);
    if (auto tensor = inertial->get_child_optional("inertia")) {
      auto at = [&](const char* key) { return tensor->get<double>(std::string("<xmlattr>.") + key, 0.0); };
      Eigen::Matrix3d i;
      i << at("ixx"), at("ixy"), at("ixz"),
           at("ixy"), at("iyy"), at("iyz"),
           at("ixz"), at("iyz"), at("izz");
      link.inertial.inertia = i;
    }
  }
  for (const auto& [key, child] : element) {
    if (key == "visual") link.visuals.push_back(parse_urdf_geometry(child, path + "/visual"));
    if (key == "collision") {
      link.collisions.push_back(parse_urdf_geometry(child, path + "/collision"));
    }
  }
  return link;
}

UrdfJoint parse_joint(const pt::ptree& element, const std::string& path) {
  UrdfJoint j;
  auto name = element.get_optional<std::string>("<xmlattr>.name");
  if (!name) throw ParseError(path, "joint is missing a name");
  j.name = *name;
  const std::string type = element.get<std::string>("<xmlattr>.type", "");
  try {
    j.kind = joint_kind_from_string(type);
  } catch (const std::invalid_argument&) {
    throw ParseError(path + "/" + j.name, "unsupported joint kind '" + type + "'");
  }
  j.origin = parse_origin(element, path + "/" + j.name);
  auto parent = element.get_optional<std::string>("parent.<xmlattr>.link");
  auto child = element.get_optional<std::string>("child.<xmlattr>.link");
  if (!parent || !child) {
    throw ParseError(path + "/" + j.name, "joint requires <parent link> and <child link>");
  }
  j.parent = *parent;
  j.child = *child;
  if (auto axis = element.get_optional<std::string>("axis.<xmlattr>.xyz")) {
    j.axis = parse_vec3(*axis, path + "/" + j.name + "/axis");
  } else {
    j.axis = Eigen::Vector3d::UnitX();  // URDF default
  }
  if (auto limit = element.get_child_optional("limit")) {
    JointLimits l;
    l.pos_min = limit->get<double>("<xmlattr>.lower", 0.0);
    l.pos_max = limit->get<double>("<xmlattr>.upper", 0.0);
    l.vel_max = limit->get<double>("<xmlattr>.velocity", 0.0);
    l.effort_max = limit->get<double>("<xmlattr>.effort", 0.0);
    j.limits = l;
  }
  return j;
}

}  // namespace

UrdfDocument read_urdf(const std::string& xml) {
  pt::ptree tree;
  std::istringstream is(xml);
  try {
    pt::read_xml(is, tree, pt::xml_parser::trim_whitespace | pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("", std::string("malformed XML: ") + e.what());
  }
  auto robot = tree.get_child_optional("robot");
  if (!robot) throw ParseError("", "missing <robot> root element");

  UrdfDocument doc;
  doc.name = robot->get<std::string>("<xmlattr>.name", "");
  for (const auto& [key, child] : *robot) {
    if (key == "link") doc.links.push_back(parse_link(child, "/robot/link"));
    if (key == "joint") doc.joints.push_back(parse_joint(child, "/robot/joint"));
  }
  for (const UrdfJoint& j : doc.joints) {
    for (const std::string* ref : {&j.parent, &j.child}) {
      if (doc.find_link(*ref) == nullptr) {
        throw ParseError("/robot/joint/" + j.name, "references unknown link '" + *ref + "'");
      }
    }
  }
  return doc;
}

Eigen::Vector3d rpy_from_rotation(const Eigen::Matrix3d& r) {
  const double cy = std::hypot(r(0, 0), r(1, 0));
  if (cy > 1e-9) {
    return {std::atan2(r(2, 1), r(2, 2)), std::atan2(-r(2, 0), cy),
            std::atan2(r(1, 0), r(0, 0))};
  }
  // Singular pitch (+-pi/2): roll is set to 0 and yaw absorbs the rest.
  return {0.0, std::atan2(-r(2, 0), cy), std::atan2(-r(0, 1), r(1, 1))};
}

Eigen::Matrix3d rotation_from_rpy(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace modforge
