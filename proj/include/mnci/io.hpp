#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mnci/common.hpp"
#include "mnci/graph.hpp"

namespace mnci {

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

/// Node embeddings addressable by external node id.
struct EmbeddingTable {
  std::vector<NodeId> ids;
  Mat vectors;  // one row per id
  std::unordered_map<NodeId, int> index;

  int dim() const { return static_cast<int>(vectors.cols()); }
  int size() const { return static_cast<int>(ids.size()); }

  const Eigen::RowVectorXd row(NodeId id) const {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("no embedding for node " + std::to_string(id));
    return vectors.row(it->second);
  }

  static EmbeddingTable from(std::vector<NodeId> ids, Mat vectors) {
    if (static_cast<int>(ids.size()) != vectors.rows()) {
      throw std::invalid_argument("id/vector count mismatch");
    }
    EmbeddingTable t;
    t.ids = std::move(ids);
    t.vectors = std::move(vectors);
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
      if (!t.index.emplace(t.ids[i], static_cast<int>(i)).second) {
        throw DataError("duplicate node id " + std::to_string(t.ids[i]));
      }
    }
    return t;
  }
};

/// Writes `N d` followed by one `node_id v_1 ... v_d` line per node. Values
/// carry 17 significant digits, so a read-back is bit-exact.
inline void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dim() << '\n';
  for (int i = 0; i < table.size(); ++i) {
    out << table.ids[i];
    for (int j = 0; j < table.dim(); ++j) out << ' ' << detail::fmt17(table.vectors(i, j));
    out << '\n';
  }
}

inline void write_embeddings_file(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embeddings: " + path);
  write_embeddings(table, out);
  if (!out) throw DataError("write failed: " + path);
}

inline EmbeddingTable read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty embeddings file");
  auto head = detail::split_ws(line);
  std::int64_t n = 0, d = 0;
  if (head.size() != 2 || !detail::parse_int(head[0], n) || !detail::parse_int(head[1], d) ||
      n < 0 || d <= 0) {
    throw DataError("bad embeddings header");
  }
  std::vector<NodeId> ids;
  Mat vectors(n, d);
  int row = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (row >= n) throw DataError("more embedding rows than the header declares");
    if (static_cast<std::int64_t>(toks.size()) != d + 1) {
      throw DataError(detail::at_line(line_no, "expected node id plus " + std::to_string(d) + " values"));
    }
    NodeId id;
    if (!detail::parse_int(toks[0], id)) throw DataError(detail::at_line(line_no, "bad node id"));
    ids.push_back(id);
    for (std::int64_t j = 0; j < d; ++j) {
      double v;
      if (!detail::parse_real(toks[j + 1], v)) {
        throw DataError(detail::at_line(line_no, "bad embedding value"));
      }
      vectors(row, j) = v;
    }
    ++row;
  }
  if (row != n) throw DataError("fewer embedding rows than the header declares");
  return EmbeddingTable::from(std::move(ids), std::move(vectors));
}

inline EmbeddingTable read_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings: " + path);
  return read_embeddings(in);
}

/// One `name rank dims... values...` record of the checkpoint format. Values
/// stay as tokens so integer tensors round-trip exactly.
struct TensorRecord {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<std::string> tokens;

  std::int64_t count() const {
    std::int64_t c = 1;
    for (auto d : dims) c *= d;
    return dims.empty() ? 1 : c;
  }

  std::vector<double> as_reals() const {
    std::vector<double> out(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!detail::parse_real(tokens[i], out[i])) {
        throw DataError("bad real value in tensor " + name);
      }
    }
    return out;
  }

  std::vector<std::int64_t> as_ints() const {
    std::vector<std::int64_t> out(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!detail::parse_int(tokens[i], out[i])) {
        throw DataError("bad integer value in tensor " + name);
      }
    }
    return out;
  }

  Mat as_matrix() const {
    if (dims.size() != 2) throw DataError("tensor " + name + " is not a matrix");
    auto vals = as_reals();
    Mat m(dims[0], dims[1]);
    for (std::int64_t i = 0; i < dims[0]; ++i) {
      for (std::int64_t j = 0; j < dims[1]; ++j) m(i, j) = vals[i * dims[1] + j];
    }
    return m;
  }

  Vec as_vector() const {
    if (dims.size() != 1) throw DataError("tensor " + name + " is not a vector");
    auto vals = as_reals();
    return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }

  double as_scalar() const {
    if (!dims.empty() || tokens.size() != 1) throw DataError("tensor " + name + " is not a scalar");
    return as_reals()[0];
  }

  std::int64_t as_int_scalar() const {
    if (!dims.empty() || tokens.size() != 1) throw DataError("tensor " + name + " is not a scalar");
    return as_ints()[0];
  }
};

class TensorWriter {
 public:
  explicit TensorWriter(std::ostream& out) : out_(out) {}

  void scalar(const std::string& name, double v) { line(name, {}, {detail::fmt17(v)}); }

  void scalar_int(const std::string& name, std::int64_t v) {
    line(name, {}, {std::to_string(v)});
  }

  void vector(const std::string& name, const Vec& v) {
    std::vector<std::string> toks(v.size());
    for (int i = 0; i < v.size(); ++i) toks[i] = detail::fmt17(v[i]);
    line(name, {v.size()}, toks);
  }

  void vector_int(const std::string& name, const std::vector<std::int64_t>& v) {
    std::vector<std::string> toks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) toks[i] = std::to_string(v[i]);
    line(name, {static_cast<std::int64_t>(v.size())}, toks);
  }

  void vector_reals(const std::string& name, const std::vector<double>& v) {
    std::vector<std::string> toks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) toks[i] = detail::fmt17(v[i]);
    line(name, {static_cast<std::int64_t>(v.size())}, toks);
  }

  void matrix(const std::string& name, const Mat& m) {
    std::vector<std::string> toks;
    toks.reserve(static_cast<std::size_t>(m.size()));
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) toks.push_back(detail::fmt17(m(i, j)));
    }
    line(name, {m.rows(), m.cols()}, toks);
  }

  void tokens(const std::string& name, const std::vector<std::string>& toks) {
    line(name, {static_cast<std::int64_t>(toks.size())}, toks);
  }

 private:
  void line(const std::string& name, std::vector<std::int64_t> dims,
            const std::vector<std::string>& toks) {
    out_ << name << ' ' << dims.size();
    for (auto d : dims) out_ << ' ' << d;
    for (const auto& t : toks) out_ << ' ' << t;
    out_ << '\n';
  }

  std::ostream& out_;
};

/// Parses tensor records into a name-keyed map. The caller consumes them by
/// name and decides each record's element type.
inline std::map<std::string, TensorRecord> read_tensor_records(std::istream& in) {
  std::map<std::string, TensorRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    TensorRecord rec;
    rec.name = std::string(toks[0]);
    if (toks.size() < 2) throw DataError("truncated tensor line: " + rec.name);
    std::int64_t rank;
    if (!detail::parse_int(toks[1], rank) || rank < 0 || rank > 2) {
      throw DataError("bad tensor rank: " + rec.name);
    }
    std::size_t pos = 2;
    for (std::int64_t r = 0; r < rank; ++r, ++pos) {
      std::int64_t d;
      if (pos >= toks.size() || !detail::parse_int(toks[pos], d) || d < 0) {
        throw DataError("bad tensor shape: " + rec.name);
      }
      rec.dims.push_back(d);
    }
    for (; pos < toks.size(); ++pos) rec.tokens.emplace_back(toks[pos]);
    if (static_cast<std::int64_t>(rec.tokens.size()) != rec.count()) {
      throw DataError("tensor " + rec.name + " value count does not match its shape");
    }
    if (!out.emplace(rec.name, std::move(rec)).second) {
      throw DataError("duplicate tensor " + std::string(toks[0]));
    }
  }
  return out;
}

}  // namespace mnci
