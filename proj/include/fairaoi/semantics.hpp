#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fairaoi/common.hpp"

namespace fairaoi {

struct SemanticTriple {
  std::string subject;
  std::string relation;
  std::string object;
};

using TripleSet = std::vector<SemanticTriple>;
using EmbeddingVector = std::vector<double>;

namespace detail {

// Number of Unicode scalar values in a UTF-8 string (continuation bytes do
// not count). Malformed sequences are rejected.
inline std::size_t codepoint_count(const std::string& s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = s[i];
    std::size_t len;
    if (c < 0x80) len = 1;
    else if ((c >> 5) == 0x6) len = 2;
    else if ((c >> 4) == 0xE) len = 3;
    else if ((c >> 3) == 0x1E) len = 4;
    else throw std::invalid_argument("invalid UTF-8 lead byte");
    if (i + len > s.size()) throw std::invalid_argument("truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2)
        throw std::invalid_argument("invalid UTF-8 continuation byte");
    i += len;
    ++n;
  }
  return n;
}

}  // namespace detail

/*! Character count of one triple: |subject| + |relation| + |object|. */
inline std::size_t payload_length(const SemanticTriple& t) {
  if (t.subject.empty() || t.relation.empty() || t.object.empty())
    throw std::invalid_argument("payload_length: triple components must be non-empty");
  return detail::codepoint_count(t.subject) + detail::codepoint_count(t.relation) +
         detail::codepoint_count(t.object);
}

inline std::size_t payload_length(const TripleSet& set) {
  std::size_t n = 0;
  for (const auto& t : set) n += payload_length(t);
  return n;
}

/*! Mean encoded image size over the sets: bits_per_char * sum(L) / K. */
inline double mean_payload_bits(const std::vector<TripleSet>& sets, int bits_per_char) {
  if (sets.empty()) throw std::invalid_argument("mean_payload_bits: no triple sets");
  if (bits_per_char < 1) throw std::invalid_argument("mean_payload_bits: bits_per_char < 1");
  double total = 0.0;
  for (const auto& s : sets) total += static_cast<double>(payload_length(s));
  return bits_per_char * total / static_cast<double>(sets.size());
}

namespace detail {

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const EmbeddingVector& a) { return std::sqrt(dot(a, a)); }

/*!
 * Modified Gram-Schmidt with one re-orthogonalization pass. Vectors whose
 * residual drops below 1e-10 of their input norm are linearly dependent on
 * the basis so far and are dropped.
 */
inline std::vector<EmbeddingVector> orthonormalize(const std::vector<EmbeddingVector>& in) {
  std::vector<EmbeddingVector> basis;
  for (const auto& v : in) {
    double in_norm = norm(v);
    if (in_norm == 0.0) continue;
    EmbeddingVector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        double c = dot(r, q);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * q[i];
      }
    double rn = norm(r);
    if (rn < 1e-10 * in_norm) continue;
    for (double& x : r) x /= rn;
    basis.push_back(std::move(r));
  }
  return basis;
}

}  // namespace detail

/*!
 * Similarity between one triple set and the scene graph: the norm of the
 * projection of the graph vector onto the span of the set's vectors,
 * normalized by the graph norm. Lies in [0,1]; 1 means the graph vector is
 * inside the span, 0 means orthogonal to it.
 */
inline double similarity(const std::vector<EmbeddingVector>& set_vectors,
                         const EmbeddingVector& graph_vector) {
  double gn = detail::norm(graph_vector);
  if (gn == 0.0) throw std::invalid_argument("similarity: graph vector has zero norm");
  for (const auto& v : set_vectors)
    if (v.size() != graph_vector.size())
      throw std::invalid_argument("similarity: embedding dimension mismatch");
  std::vector<EmbeddingVector> basis = detail::orthonormalize(set_vectors);
  double proj_sq = 0.0;
  for (const auto& q : basis) {
    double c = detail::dot(graph_vector, q);
    proj_sq += c * c;
  }
  double s = std::sqrt(proj_sq) / gn;
  return std::min(s, 1.0);  // guard rounding just above 1
}

/*! Image semantic similarity score: mean of the first `count` scores. */
inline double mean_similarity(const std::vector<double>& scores, std::size_t count) {
  if (scores.empty()) throw std::invalid_argument("mean_similarity: no scores");
  if (count == 0) throw std::invalid_argument("mean_similarity: count must be >= 1");
  std::size_t n = std::min(count, scores.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += scores[i];
  return s / static_cast<double>(n);
}

/*!
 * Triple file: one triple per line, tab-separated subject, relation, object.
 * Blank lines are ignored.
 */
inline TripleSet load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open triple file '" + path + "'");
  TripleSet out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos ||
        line.find('\t', t2 + 1) != std::string::npos)
      throw config_error(path + ":" + std::to_string(lineno) +
                         ": expected exactly three tab-separated fields");
    SemanticTriple t{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                     line.substr(t2 + 1)};
    if (t.subject.empty() || t.relation.empty() || t.object.empty())
      throw config_error(path + ":" + std::to_string(lineno) + ": empty triple component");
    out.push_back(std::move(t));
  }
  return out;
}

namespace detail {
inline int parse_embedding_dim(const std::string& line, const std::string& path) {
  try {
    std::size_t pos = 0;
    int dim = std::stoi(line, &pos);
    if (pos != line.size() || dim < 1) throw std::invalid_argument(line);
    return dim;
  } catch (const std::exception&) {
    throw config_error(path + ": first line must be a positive dimension, got '" + line + "'");
  }
}
}  // namespace detail

/*!
 * Embedding file: first line is the dimension, each following line one
 * vector as comma-separated decimals.
 */
inline std::vector<EmbeddingVector> load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open embedding file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw config_error(path + ": missing dimension line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int dim = detail::parse_embedding_dim(line, path);
  std::vector<EmbeddingVector> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    EmbeddingVector v;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        v.push_back(std::stod(item, &pos));
        while (pos < item.size() && (item[pos] == ' ' || item[pos] == '\t')) ++pos;
        if (pos != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw config_error(path + ":" + std::to_string(lineno) + ": bad decimal '" + item + "'");
      }
    }
    if (static_cast<int>(v.size()) != dim)
      throw config_error(path + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(dim) + " components, got " + std::to_string(v.size()));
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace fairaoi
