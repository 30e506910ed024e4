#include "json_util.hpp"

namespace modforge::detail {

Transform parse_transform(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 16) {
    throw ParseError(path, "expected a row-major 4x4 matrix as 16 numbers");
  }
  Eigen::Matrix4d m;
  for (int i = 0; i < 16; ++i) {
    m(i / 4, i % 4) = number_at(j, path, static_cast<std::size_t>(i));
  }
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
    throw ParseError(path, "bottom row must be (0, 0, 0, 1)");
  }
  Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  if (!is_rotation(r, 1e-9)) {
    throw ParseError(path, "rotation block must be orthonormal with determinant +1");
  }
  return Transform::from_matrix(m);
}

json transform_to_json(const Transform& t) {
  const Eigen::Matrix4d m = t.matrix();
  json out = json::array();
  for (int i = 0; i < 16; ++i) out.push_back(m(i / 4, i % 4));
  return out;
}

Geometry parse_geometry(const json& j, const std::string& path) {
  Geometry g;
  const std::string shape = require_string(j, path, "shape");
  try {
    g.shape = shape_kind_from_string(shape);
  } catch (const std::invalid_argument&) {
    throw ParseError(path + "/shape", "must be one of box, cylinder, sphere, mesh");
  }
  switch (g.shape) {
    case ShapeKind::box: {
      const json& size = require_array(j, path, "size", 3);
      for (int i = 0; i < 3; ++i) g.size[i] = number_at(size, path + "/size", i);
      break;
    }
    case ShapeKind::cylinder:
      g.radius = require_number(j, path, "radius");
      g.length = require_number(j, path, "length");
      break;
    case ShapeKind::sphere:
      g.radius = require_number(j, path, "radius");
      break;
    case ShapeKind::mesh:
      g.mesh_path = require_string(j, path, "path");
      break;
  }
  if (auto it = j.find("pose"); it != j.end()) {
    g.pose = parse_transform(*it, path + "/pose");
  }
  return g;
}

json geometry_to_json(const Geometry& g) {
  json j;
  j["shape"] = to_string(g.shape);
  switch (g.shape) {
    case ShapeKind::box:
      j["size"] = {g.size[0], g.size[1], g.size[2]};
      break;
    case ShapeKind::cylinder:
      j["radius"] = g.radius;
      j["length"] = g.length;
      break;
    case ShapeKind::sphere:
      j["radius"] = g.radius;
      break;
    case ShapeKind::mesh:
      j["path"] = g.mesh_path;
      break;
  }
  j["pose"] = transform_to_json(g.pose);
  return j;
}

json parse_document(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw ParseError("", "document is not well-formed JSON");
  }
  return doc;
}

}  // namespace modforge::detail
