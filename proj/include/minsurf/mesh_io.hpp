#pragma once

#include "mesh.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace minsurf {

class FormatError : public Error {
public:
  using Error::Error;
};

namespace detail {
inline void put_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
} // namespace detail

/// Writes "MESH nv nt", nv lines "x y tag", nt lines "i j k".
inline void write_mesh(std::ostream& os, const TriMesh& mesh) {
  os << "MESH " << mesh.vertex_count() << ' ' << mesh.triangle_count() << '\n';
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    detail::put_double(os, mesh.vertex(v).x());
    os << ' ';
    detail::put_double(os, mesh.vertex(v).y());
    os << ' ' << static_cast<int>(mesh.tag(v)) << '\n';
  }
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

/// Writes "FIELD name" followed by one value per vertex.
inline void write_field(std::ostream& os, std::string_view name, const Eigen::VectorXd& values) {
  os << "FIELD " << name << '\n';
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    detail::put_double(os, values[i]);
    os << '\n';
  }
}

struct MeshFile {
  MeshPtr mesh;
  std::vector<std::pair<std::string, Eigen::VectorXd>> fields;
};

/// Reads a mesh block, optionally followed by FIELD blocks. `h` is not stored in
/// the format; the caller supplies it.
inline MeshFile read_mesh(std::istream& is, double h = 0.0) {
  std::string word;
  std::size_t nv = 0, nt = 0;
  if (!(is >> word) || word != "MESH" || !(is >> nv >> nt)) throw FormatError("expected 'MESH nv nt' header");
  std::vector<Vec2> vs(nv);
  std::vector<BoundaryTag> tags(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    int tag = 0;
    if (!(is >> vs[i].x() >> vs[i].y() >> tag) || tag < 0 || tag > 2) throw FormatError("bad vertex line");
    tags[i] = static_cast<BoundaryTag>(tag);
  }
  std::vector<Triangle> ts(nt);
  for (auto& t : ts)
    if (!(is >> t[0] >> t[1] >> t[2])) throw FormatError("bad triangle line");
  MeshFile out;
  out.mesh = std::make_shared<const TriMesh>(std::move(vs), std::move(ts), std::move(tags), h);
  while (is >> word) {
    if (word != "FIELD") throw FormatError("expected FIELD block");
    std::string name;
    if (!(is >> name)) throw FormatError("FIELD without a name");
    Eigen::VectorXd values(static_cast<Eigen::Index>(nv));
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (!(is >> values[i])) throw FormatError("FIELD block shorter than the vertex count");
    out.fields.emplace_back(std::move(name), std::move(values));
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error("write failed: " + path);
}

} // namespace minsurf
