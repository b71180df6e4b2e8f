#include "gibbskit/lattice_model.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <set>

namespace gibbskit {

Hamiltonian::Hamiltonian(int num_vertices, int local_dim, const std::vector<TermSpec>& terms) {
  if (num_vertices <= 0) throw InvalidArgument("number of vertices must be positive");
  if (local_dim < 2) throw InvalidArgument("local dimension must be at least 2");
  lattice_.num_vertices = num_vertices;
  lattice_.local_dim = local_dim;
  for (const auto& spec : terms) {
    if (spec.support.empty()) throw InvalidArgument("term support is empty");
    std::vector<int> sorted = spec.support;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidArgument("term support has repeated vertices");
    for (int v : sorted)
      if (v < 0 || v >= num_vertices)
        throw InvalidArgument("vertex index " + std::to_string(v) + " out of range [0, " +
                              std::to_string(num_vertices) + ")");
    const auto dim = static_cast<Eigen::Index>(ipow(local_dim, sorted.size()));
    if (spec.matrix.rows() != dim || spec.matrix.cols() != dim)
      throw InvalidArgument("term matrix on " + std::to_string(sorted.size()) + " sites must be " +
                            std::to_string(dim) + "x" + std::to_string(dim));
    if (!is_hermitian(spec.matrix, 1e-12)) throw InvalidArgument("term matrix is not Hermitian");
    Matrix m = std::is_sorted(spec.support.begin(), spec.support.end())
                   ? spec.matrix
                   : permute_to_sorted(spec.matrix, spec.support, local_dim);
    m = (0.5 * (m + m.adjoint())).eval();
    LocalTerm t;
    t.edge_index = static_cast<int>(terms_.size());
    t.op = DenseOperator{std::move(m), sorted, local_dim};
    terms_.push_back(std::move(t));
    lattice_.hyperedges.push_back(sorted);
  }
  recompute_derived();
}

void Hamiltonian::recompute_derived() {
  const auto& edges = lattice_.hyperedges;
  lattice_.k = 0;
  for (const auto& e : edges) lattice_.k = std::max<int>(lattice_.k, static_cast<int>(e.size()));

  std::vector<std::vector<int>> incident(static_cast<std::size_t>(lattice_.num_vertices));
  for (std::size_t i = 0; i < edges.size(); ++i)
    for (int v : edges[i]) incident[static_cast<std::size_t>(v)].push_back(static_cast<int>(i));

  lattice_.degree = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::set<int> adjacent;
    for (int v : edges[i])
      for (int j : incident[static_cast<std::size_t>(v)])
        if (j != static_cast<int>(i)) adjacent.insert(j);
    lattice_.degree = std::max<int>(lattice_.degree, static_cast<int>(adjacent.size()));
  }

  h_ = 0.0;
  for (auto& t : terms_) {
    t.norm = op_norm(t.op.matrix);
    h_ = std::max(h_, t.norm);
  }
  J_ = 0.0;
  for (const auto& inc : incident) {
    double s = 0.0;
    for (int i : inc) s += terms_[static_cast<std::size_t>(i)].norm;
    J_ = std::max(J_, s);
  }

  neighbors_.assign(static_cast<std::size_t>(lattice_.num_vertices), {});
  for (int v = 0; v < lattice_.num_vertices; ++v) {
    std::set<int> nb;
    for (int i : incident[static_cast<std::size_t>(v)])
      for (int w : edges[static_cast<std::size_t>(i)])
        if (w != v) nb.insert(w);
    neighbors_[static_cast<std::size_t>(v)].assign(nb.begin(), nb.end());
  }
}

DenseOperator Hamiltonian::sum_terms(const std::vector<int>& indices, const Region& support) const {
  const auto dim = ipow(local_dim(), support.size());
  require_dense(dim, "Hamiltonian matrix");
  DenseOperator out{Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)), support,
                    local_dim()};
  for (int i : indices) accumulate_embedded(out.matrix, term(i).op, support);
  return out;
}

DenseOperator Hamiltonian::full() const {
  std::vector<int> all(terms_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return sum_terms(all, all_vertices());
}

std::vector<int> Hamiltonian::terms_inside(const Region& region) const {
  std::vector<int> out;
  for (const auto& t : terms_)
    if (is_subset(t.op.support, region)) out.push_back(t.edge_index);
  return out;
}

std::vector<int> Hamiltonian::terms_touching(const Region& region) const {
  std::vector<int> out;
  for (const auto& t : terms_)
    if (!support_intersection(t.op.support, region).empty()) out.push_back(t.edge_index);
  return out;
}

Hamiltonian Hamiltonian::subset(const std::vector<int>& indices) const {
  std::vector<TermSpec> specs;
  for (int i : indices) specs.push_back({term(i).op.support, term(i).op.matrix});
  return Hamiltonian(num_vertices(), local_dim(), specs);
}

Region Hamiltonian::all_vertices() const {
  Region r(static_cast<std::size_t>(num_vertices()));
  for (int v = 0; v < num_vertices(); ++v) r[static_cast<std::size_t>(v)] = v;
  return r;
}

nlohmann::json Hamiltonian::summary() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : terms_) terms.push_back({{"support", t.op.support}, {"norm", t.norm}});
  return {{"N", num_vertices()}, {"d", local_dim()},   {"num_terms", num_terms()},
          {"k", k()},            {"degree", degree()}, {"h", h()},
          {"J", J()},            {"terms", terms}};
}

// ---------------------------------------------------------------------------
// model builders

namespace {

using nlohmann::json;

void check_keys(const json& spec, const std::string& model, std::initializer_list<const char*> allowed) {
  for (auto it = spec.begin(); it != spec.end(); ++it) {
    if (it.key() == "model") continue;
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InvalidArgument("unknown key '" + it.key() + "' for model '" + model + "'");
  }
}

double number(const json& spec, const char* key, double fallback) {
  if (!spec.contains(key)) return fallback;
  if (!spec[key].is_number()) throw InvalidArgument(std::string("model key '") + key + "' must be a number");
  return spec[key].get<double>();
}

int positive_int(const json& spec, const char* key, int fallback) {
  if (!spec.contains(key)) {
    if (fallback > 0) return fallback;
    throw InvalidArgument(std::string("model key '") + key + "' is required");
  }
  if (!spec[key].is_number_integer() || spec[key].get<long long>() <= 0)
    throw InvalidArgument(std::string("model key '") + key + "' must be a positive integer");
  return spec[key].get<int>();
}

bool periodic_flag(const json& spec) {
  if (!spec.contains("boundary")) return false;
  if (!spec["boundary"].is_string()) throw InvalidArgument("model key 'boundary' must be \"open\" or \"periodic\"");
  const auto b = spec["boundary"].get<std::string>();
  if (b == "open") return false;
  if (b == "periodic") return true;
  throw InvalidArgument("model key 'boundary' must be \"open\" or \"periodic\", got \"" + b + "\"");
}

void push_if_nonzero(std::vector<TermSpec>& out, std::vector<int> support, double coeff, const Matrix& m) {
  if (coeff == 0.0) return;
  out.push_back({std::move(support), coeff * m});
}

// Field term on site j, then the bond starting at j; for periodic chains the
// closing bond comes last.
Hamiltonian chain_model(const json& spec, const Matrix& bond, double bond_coeff, const Matrix& field,
                        double field_coeff) {
  const int n = positive_int(spec, "N", 0);
  const bool periodic = periodic_flag(spec);
  std::vector<TermSpec> terms;
  for (int j = 0; j < n; ++j) {
    push_if_nonzero(terms, {j}, field_coeff, field);
    if (j + 1 < n) push_if_nonzero(terms, {j, j + 1}, bond_coeff, bond);
  }
  if (periodic && n > 2) push_if_nonzero(terms, {0, n - 1}, bond_coeff, bond);
  return Hamiltonian(n, 2, terms);
}

Matrix json_matrix(const json& rows, std::size_t dim, const std::string& what) {
  if (!rows.is_array() || rows.size() != dim)
    throw InvalidArgument(what + " must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
  Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    if (!rows[i].is_array() || rows[i].size() != dim)
      throw InvalidArgument(what + " row " + std::to_string(i) + " must have " + std::to_string(dim) + " entries");
    for (std::size_t j = 0; j < dim; ++j) {
      if (!rows[i][j].is_number()) throw InvalidArgument(what + " entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

Hamiltonian custom_model(const json& spec) {
  check_keys(spec, "custom", {"N", "d", "terms"});
  const int d = spec.contains("d") ? positive_int(spec, "d", 2) : 2;
  if (!spec.contains("terms") || !spec["terms"].is_array())
    throw InvalidArgument("model key 'terms' must be an array");
  std::vector<TermSpec> terms;
  int max_vertex = -1;
  for (std::size_t t = 0; t < spec["terms"].size(); ++t) {
    const auto& js = spec["terms"][t];
    const std::string where = "terms[" + std::to_string(t) + "]";
    if (!js.contains("support") || !js["support"].is_array())
      throw InvalidArgument(where + ".support must be an array of vertex indices");
    std::vector<int> support;
    for (const auto& v : js["support"]) {
      if (!v.is_number_integer()) throw InvalidArgument(where + ".support entries must be integers");
      support.push_back(v.get<int>());
      max_vertex = std::max(max_vertex, support.back());
    }
    const std::size_t dim = ipow(d, support.size());
    Matrix m;
    if (js.contains("pauli")) {
      if (d != 2) throw InvalidArgument(where + ".pauli requires d = 2");
      const auto labels = js["pauli"].get<std::string>();
      if (labels.size() != support.size())
        throw InvalidArgument(where + ".pauli must have one label per support site");
      m = pauli_string(labels);
    } else {
      if (!js.contains("matrix_re")) throw InvalidArgument(where + ".matrix_re is required");
      m = json_matrix(js["matrix_re"], dim, where + ".matrix_re");
      if (js.contains("matrix_im")) m += cplx(0, 1) * json_matrix(js["matrix_im"], dim, where + ".matrix_im");
    }
    if (js.contains("coefficient")) m *= js["coefficient"].get<double>();
    terms.push_back({support, m});
  }
  const int n = spec.contains("N") ? positive_int(spec, "N", 0) : max_vertex + 1;
  return Hamiltonian(n, d, terms);
}

// Random Hermitian two-site bonds with Gaussian entries, rescaled so that the
// operator norm is scale * u with u uniform in [1/2, 1].
Hamiltonian random_chain(const json& spec) {
  check_keys(spec, "random_chain", {"N", "seed", "scale", "d"});
  const int n = positive_int(spec, "N", 0);
  const int d = spec.contains("d") ? positive_int(spec, "d", 2) : 2;
  const double scale = number(spec, "scale", 1.0);
  const auto seed = spec.contains("seed") ? spec["seed"].get<std::uint64_t>() : 0ull;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.5, 1.0);
  std::vector<TermSpec> terms;
  const auto dim = static_cast<Eigen::Index>(d * d);
  for (int j = 0; j + 1 < n; ++j) {
    Matrix g(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c)
      for (Eigen::Index r = 0; r < dim; ++r) g(r, c) = cplx(gauss(rng), gauss(rng));
    Matrix hm = 0.5 * (g + g.adjoint());
    hm *= scale * unif(rng) / op_norm(hm);
    terms.push_back({{j, j + 1}, hm});
  }
  return Hamiltonian(n, d, terms);
}

}  // namespace

Hamiltonian build_model(const json& spec) {
  if (!spec.is_object()) throw InvalidArgument("model description must be a JSON object");
  if (!spec.contains("model") || !spec["model"].is_string())
    throw InvalidArgument("model key 'model' is required");
  const auto name = spec["model"].get<std::string>();
  const Matrix x = pauli('X'), y = pauli('Y'), z = pauli('Z');
  if (name == "tfim_chain") {
    check_keys(spec, name, {"N", "J", "Delta", "boundary"});
    return chain_model(spec, kron(x, x), number(spec, "J", 1.0), z, number(spec, "Delta", 1.0));
  }
  if (name == "heisenberg_chain") {
    check_keys(spec, name, {"N", "J", "Delta", "h", "boundary"});
    const Matrix bond = kron(x, x) + kron(y, y) + number(spec, "Delta", 1.0) * kron(z, z);
    return chain_model(spec, bond, number(spec, "J", 1.0), z, number(spec, "h", 0.0));
  }
  if (name == "classical_ising") {
    check_keys(spec, name, {"N", "J", "h", "boundary"});
    return chain_model(spec, kron(z, z), number(spec, "J", 1.0), z, number(spec, "h", 0.0));
  }
  if (name == "tfim_grid") {
    check_keys(spec, name, {"Lx", "Ly", "J", "Delta"});
    const int lx = positive_int(spec, "Lx", 0), ly = positive_int(spec, "Ly", 0);
    const double jc = number(spec, "J", 1.0), delta = number(spec, "Delta", 1.0);
    std::vector<TermSpec> terms;
    for (int yy = 0; yy < ly; ++yy)
      for (int xx = 0; xx < lx; ++xx) {
        const int s = yy * lx + xx;
        push_if_nonzero(terms, {s}, delta, z);
        if (xx + 1 < lx) push_if_nonzero(terms, {s, s + 1}, jc, kron(x, x));
        if (yy + 1 < ly) push_if_nonzero(terms, {s, s + lx}, jc, kron(x, x));
      }
    return Hamiltonian(lx * ly, 2, terms);
  }
  if (name == "custom") return custom_model(spec);
  if (name == "random_chain") return random_chain(spec);
  throw InvalidArgument("unknown model '" + name + "'");
}

Hamiltonian build_model_from_text(const std::string& json_text) {
  json spec;
  try {
    spec = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model JSON does not parse: ") + e.what());
  }
  return build_model(spec);
}

// ---------------------------------------------------------------------------
// geometry

Region make_region(const Hamiltonian& hamiltonian, std::vector<int> vertices) {
  std::sort(vertices.begin(), vertices.end());
  if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end())
    throw InvalidArgument("region has repeated vertices");
  for (int v : vertices)
    if (v < 0 || v >= hamiltonian.num_vertices())
      throw InvalidArgument("region vertex " + std::to_string(v) + " out of range");
  return vertices;
}

Region complement(const Hamiltonian& hamiltonian, const Region& region) {
  return support_difference(hamiltonian.all_vertices(), region);
}

std::vector<int> vertex_distances(const Hamiltonian& hamiltonian, const Region& region) {
  std::vector<int> dist(static_cast<std::size_t>(hamiltonian.num_vertices()), kUnreachable);
  std::deque<int> queue;
  for (int v : region) {
    dist[static_cast<std::size_t>(v)] = 0;
    queue.push_back(v);
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : hamiltonian.neighbors()[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(w)] != kUnreachable) continue;
      dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
      queue.push_back(w);
    }
  }
  return dist;
}

int distance(const Hamiltonian& hamiltonian, const Region& a, const Region& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("distance: regions must be nonempty");
  if (!support_intersection(a, b).empty()) throw InvalidArgument("distance: regions overlap");
  const auto dist = vertex_distances(hamiltonian, a);
  int best = kUnreachable;
  for (int v : b) best = std::min(best, dist[static_cast<std::size_t>(v)]);
  return best;
}

Region ball(const Hamiltonian& hamiltonian, const Region& region, int radius) {
  const auto dist = vertex_distances(hamiltonian, region);
  Region out;
  for (int v = 0; v < hamiltonian.num_vertices(); ++v)
    if (dist[static_cast<std::size_t>(v)] <= radius) out.push_back(v);
  return out;
}

Region boundary(const Hamiltonian& hamiltonian, const Region& a) {
  std::set<int> out;
  for (const auto& e : hamiltonian.lattice().hyperedges) {
    auto inside = support_intersection(e, a);
    if (inside.empty() || inside.size() == e.size()) continue;
    out.insert(inside.begin(), inside.end());
  }
  return {out.begin(), out.end()};
}

int edge_chain_length(const Hamiltonian& hamiltonian, int i, int j) {
  const auto& edges = hamiltonian.lattice().hyperedges;
  const int m = static_cast<int>(edges.size());
  if (i < 0 || j < 0 || i >= m || j >= m) throw InvalidArgument("edge index out of range");
  if (i == j) throw InvalidArgument("edge_chain_length: edges must differ");
  std::vector<int> dist(static_cast<std::size_t>(m), kUnreachable);
  std::deque<int> queue{i};
  dist[static_cast<std::size_t>(i)] = 1;
  while (!queue.empty()) {
    const int e = queue.front();
    queue.pop_front();
    for (int f = 0; f < m; ++f) {
      if (dist[static_cast<std::size_t>(f)] != kUnreachable) continue;
      if (support_intersection(edges[static_cast<std::size_t>(e)], edges[static_cast<std::size_t>(f)]).empty())
        continue;
      dist[static_cast<std::size_t>(f)] = dist[static_cast<std::size_t>(e)] + 1;
      if (f == j) return dist[static_cast<std::size_t>(f)];
      queue.push_back(f);
    }
  }
  return kUnreachable;
}

Interaction interaction_between(const Hamiltonian& hamiltonian, const Region& a, const Region& b) {
  Interaction out;
  for (const auto& t : hamiltonian.terms()) {
    if (support_intersection(t.op.support, a).empty() || support_intersection(t.op.support, b).empty()) continue;
    out.term_indices.push_back(t.edge_index);
    out.support = support_union(out.support, t.op.support);
  }
  if (!out.term_indices.empty()) out.norm = op_norm(hamiltonian.sum_terms(out.term_indices, out.support).matrix);
  return out;
}

}  // namespace gibbskit
