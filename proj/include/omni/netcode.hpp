#pragma once

// Linear transmission schemes for finite linear sources: the multicast
// network view with its expanded transfer matrices, randomized code
// construction with exact verification, decoding, and greedy row selection.

#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "omni/error.hpp"
#include "omni/field.hpp"
#include "omni/rates.hpp"
#include "omni/sources.hpp"
#include "omni/value.hpp"

namespace omni::netcode {

using field::FieldMatrix;
using rates::RateVector;
using sources::LinearSource;

enum class NodeKind { super, sender, relay, receiver };

struct Node {
  NodeKind kind;
  int user;  // -1 for the super node

  std::string name() const {
    switch (kind) {
      case NodeKind::super: return "S";
      case NodeKind::sender: return "s" + std::to_string(user + 1);
      case NodeKind::relay: return "t" + std::to_string(user + 1);
      case NodeKind::receiver: return "r" + std::to_string(user + 1);
    }
    return "?";
  }
};

struct Edge {
  int from;
  int to;
  std::uint64_t capacity;  // F_p symbols per block of n source instances
};

/// Nodes: 0 = S, then s_1..s_m, t_1..t_m, r_1..r_m. Edges are grouped by
/// user i: S->s_i, s_i->r_i, s_i->t_i, then t_i->r_j for j != i ascending.
struct MulticastNetwork {
  int m = 0;
  std::uint64_t n = 1;
  std::vector<std::uint64_t> observations;  // n * l_i
  std::vector<std::uint64_t> transmissions;  // n * R_i
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  int super() const { return 0; }
  int sender(int i) const { return 1 + i; }
  int relay(int i) const { return 1 + m + i; }
  int receiver(int i) const { return 1 + 2 * m + i; }
  std::uint64_t unit_edges() const {
    std::uint64_t t = 0;
    for (const Edge& e : edges) t += e.capacity;
    return t;
  }
};

/// n * R_i as integers; NonIntegerRates when some product is fractional.
inline std::vector<std::uint64_t> integer_counts(const RateVector<Rational>& rates, std::uint64_t n) {
  if (n == 0) throw Error(Errc::invalid_n, "block length n must be at least 1");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    Rational k = rates[i] * n;
    if (k < 0) throw Error(Errc::infeasible_rates, "rate of user " + std::to_string(i + 1) + " is negative");
    if (boost::multiprecision::denominator(k) != 1) {
      throw Error(Errc::non_integer_rates, "n * R_" + std::to_string(i + 1) + " = " +
                                               ValueTraits<Rational>::to_string(k) + " is not an integer");
    }
    out.push_back(boost::multiprecision::numerator(k).convert_to<std::uint64_t>());
  }
  return out;
}

inline MulticastNetwork build_network(const LinearSource& src, const RateVector<Rational>& rates, std::uint64_t n) {
  auto oracle = sources::linear_oracle(src);
  if (rates.size() != static_cast<std::size_t>(src.users())) {
    throw Error(Errc::dimension_mismatch, "rate vector length differs from the number of users");
  }
  MulticastNetwork net;
  net.m = src.users();
  net.n = n;
  net.transmissions = integer_counts(rates, n);
  if (!rates::verify_feasible(oracle, rates)) {
    throw Error(Errc::infeasible_rates, "rates violate a cut constraint R(S) >= H(S | S^c)");
  }
  for (int i = 0; i < net.m; ++i) net.observations.push_back(n * src.observations(i));
  net.nodes.push_back({NodeKind::super, -1});
  for (NodeKind k : {NodeKind::sender, NodeKind::relay, NodeKind::receiver})
    for (int i = 0; i < net.m; ++i) net.nodes.push_back({k, i});
  for (int i = 0; i < net.m; ++i) {
    net.edges.push_back({net.super(), net.sender(i), net.observations[i]});
    net.edges.push_back({net.sender(i), net.receiver(i), net.observations[i]});
    net.edges.push_back({net.sender(i), net.relay(i), net.transmissions[i]});
    for (int j = 0; j < net.m; ++j)
      if (j != i) net.edges.push_back({net.relay(i), net.receiver(j), net.transmissions[i]});
  }
  return net;
}

/// Per-user coefficient matrices C_i of shape (n R_i) x (n l_i); user i
/// broadcasts C_i (I_n (x) A_i) W.
struct TransmissionScheme {
  std::uint64_t n = 1;
  std::uint64_t p = 0;
  std::vector<FieldMatrix> c;

  int users() const { return static_cast<int>(c.size()); }
};

inline void check_scheme(const LinearSource& src, const TransmissionScheme& s) {
  if (s.c.size() != src.a.size()) throw Error(Errc::dimension_mismatch, "scheme and source differ in user count");
  if (s.n == 0) throw Error(Errc::invalid_n, "block length n must be at least 1");
  if (s.p != src.p) throw Error(Errc::dimension_mismatch, "scheme and source are over different fields");
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    if (s.c[i].cols() != s.n * src.a[i].rows() || s.c[i].modulus() != src.p) {
      throw Error(Errc::dimension_mismatch, "coefficient matrix of user " + std::to_string(i + 1) + " must have " +
                                                std::to_string(s.n * src.a[i].rows()) + " columns over F_" +
                                                std::to_string(src.p));
    }
  }
}

/// T_i = C_i (I_n (x) A_i), shape (n R_i) x (n N).
inline FieldMatrix broadcast_map(const LinearSource& src, const TransmissionScheme& s, int i) {
  return field::multiply(s.c[i], field::kron_block(s.n, src.a[i]));
}

/// Rows available to receiver j: its own block observations, then every
/// other user's broadcasts in user order.
inline FieldMatrix receiver_system(const LinearSource& src, const TransmissionScheme& s, int j) {
  std::vector<FieldMatrix> parts{field::kron_block(s.n, src.a[j])};
  for (int i = 0; i < s.users(); ++i)
    if (i != j) parts.push_back(broadcast_map(src, s, i));
  return field::stack(parts, s.n * src.packets, src.p);
}

struct ReceiverCheck {
  std::size_t achieved;
  std::size_t required;
  bool ok() const { return achieved == required; }
};

inline std::vector<ReceiverCheck> receiver_ranks(const LinearSource& src, const TransmissionScheme& s) {
  check_scheme(src, s);
  std::vector<ReceiverCheck> out;
  for (int j = 0; j < s.users(); ++j) out.push_back({field::rank(receiver_system(src, s, j)), s.n * src.packets});
  return out;
}

inline bool verify_omniscience(const LinearSource& src, const TransmissionScheme& s) {
  for (const auto& r : receiver_ranks(src, s))
    if (!r.ok()) return false;
  return true;
}

// --- expanded transfer matrix ------------------------------------------

/// Slot numbering: coding slots first (entries of C_1, C_2, ... row-major),
/// then each receiver's decoding slots (entries of B(r_j) on its incoming
/// unit edges).
struct SlotLayout {
  std::size_t coding = 0;
  std::vector<std::size_t> decoding_offset;  // per receiver
  std::vector<std::size_t> decoding_count;
  std::size_t total = 0;
};

using Assignment = std::vector<std::optional<std::uint64_t>>;

struct SlotEntry {
  std::size_t row;
  std::size_t col;
  std::size_t slot;
  bool negated;  // coding coefficients sit in I - Gamma with a minus sign
};

struct ExpandedTransferMatrix {
  int receiver = 0;
  FieldMatrix fixed;               // known entries; slot positions hold 0
  std::vector<SlotEntry> slots;    // every indeterminate position
  Assignment values;               // value per slot id (unset = indeterminate)

  std::size_t size() const { return fixed.rows(); }

  bool fully_assigned() const {
    for (const auto& e : slots)
      if (!values.at(e.slot)) return false;
    return true;
  }

  FieldMatrix evaluate() const {
    FieldMatrix m = fixed;
    for (const auto& e : slots) {
      if (!values.at(e.slot)) throw Error(Errc::constraint_violation, "slot " + std::to_string(e.slot) + " is unset");
      const std::uint64_t v = *values[e.slot] % m.modulus();
      m.set(e.row, e.col, e.negated ? field::sub_mod(0, v, m.modulus()) : v);
    }
    return m;
  }

  std::uint64_t determinant() const { return field::determinant(evaluate()); }
};

namespace detail {

// Unit-edge offsets of each edge group, following MulticastNetwork order.
struct EdgeIndex {
  std::vector<std::size_t> start;  // per network edge
  std::size_t total = 0;
};

inline EdgeIndex index_edges(const MulticastNetwork& net) {
  EdgeIndex ix;
  for (const Edge& e : net.edges) {
    ix.start.push_back(ix.total);
    ix.total += e.capacity;
  }
  return ix;
}

inline std::size_t edge_id(const MulticastNetwork& net, int from, int to) {
  for (std::size_t k = 0; k < net.edges.size(); ++k)
    if (net.edges[k].from == from && net.edges[k].to == to) return k;
  throw Error(Errc::constraint_violation, "edge not in network");
}

// Incoming unit edges of r_j in order: s_j->r_j, then t_i->r_j for i != j.
inline std::vector<std::size_t> incoming_units(const MulticastNetwork& net, const EdgeIndex& ix, int j) {
  std::vector<std::size_t> out;
  auto add = [&](std::size_t k) {
    for (std::uint64_t u = 0; u < net.edges[k].capacity; ++u) out.push_back(ix.start[k] + u);
  };
  add(edge_id(net, net.sender(j), net.receiver(j)));
  for (int i = 0; i < net.m; ++i)
    if (i != j) add(edge_id(net, net.relay(i), net.receiver(j)));
  return out;
}

}  // namespace detail

inline SlotLayout slot_layout(const MulticastNetwork& net, std::size_t packets) {
  SlotLayout l;
  for (int i = 0; i < net.m; ++i) l.coding += net.transmissions[i] * net.observations[i];
  l.total = l.coding;
  const std::size_t cols = net.n * packets;
  for (int j = 0; j < net.m; ++j) {
    std::size_t incoming = net.observations[j];
    for (int i = 0; i < net.m; ++i)
      if (i != j) incoming += net.transmissions[i];
    l.decoding_offset.push_back(l.total);
    l.decoding_count.push_back(incoming * cols);
    l.total += incoming * cols;
  }
  return l;
}

/// E(r_j) = [[A, 0], [I - Gamma, B(r_j)]] over unit edges, square of side
/// (#unit edges + nN). Unassigned coding and decoding coefficients are
/// left as slots.
inline ExpandedTransferMatrix expanded_transfer_matrix(const MulticastNetwork& net, const LinearSource& src, int j,
                                                       const Assignment& assignment) {
  if (j < 0 || j >= net.m) throw Error(Errc::unknown_receiver, "receiver " + std::to_string(j + 1) + " does not exist");
  if (net.m != src.users()) throw Error(Errc::dimension_mismatch, "network and source differ in user count");
  const SlotLayout layout = slot_layout(net, src.packets);
  if (assignment.size() != layout.total) throw Error(Errc::dimension_mismatch, "assignment size differs from slot count");
  const detail::EdgeIndex ix = detail::index_edges(net);
  const std::size_t nn = net.n * src.packets;
  const std::size_t e_units = ix.total;
  const std::size_t side = e_units + nn;

  ExpandedTransferMatrix out;
  out.receiver = j;
  out.fixed = FieldMatrix(side, side, src.p);
  out.values = assignment;
  const std::uint64_t minus_one = src.p - 1;

  // Top block A: source symbol k feeds unit edge (S->s_i, r) with the
  // coefficient of packet k in row r of I_n (x) A_i.
  for (int i = 0; i < net.m; ++i) {
    const FieldMatrix big = field::kron_block(net.n, src.a[i]);
    const std::size_t base = ix.start[detail::edge_id(net, net.super(), net.sender(i))];
    for (std::size_t r = 0; r < big.rows(); ++r)
      for (std::size_t k = 0; k < nn; ++k) out.fixed.set(k, base + r, big.at(r, k));
  }
  // Bottom-left block I - Gamma, with Gamma[e', e] the coefficient of
  // unit edge e' in unit edge e.
  for (std::size_t e = 0; e < e_units; ++e) out.fixed.set(nn + e, e, 1);
  std::size_t coding_slot = 0;
  for (int i = 0; i < net.m; ++i) {
    const std::size_t in = ix.start[detail::edge_id(net, net.super(), net.sender(i))];
    const std::size_t direct = ix.start[detail::edge_id(net, net.sender(i), net.receiver(i))];
    const std::size_t coded = ix.start[detail::edge_id(net, net.sender(i), net.relay(i))];
    for (std::uint64_t r = 0; r < net.observations[i]; ++r) out.fixed.set(nn + in + r, direct + r, minus_one);
    for (std::uint64_t q = 0; q < net.transmissions[i]; ++q)
      for (std::uint64_t r = 0; r < net.observations[i]; ++r)
        out.slots.push_back({nn + in + r, coded + q, coding_slot++, true});
    for (int t = 0; t < net.m; ++t) {
      if (t == i) continue;
      const std::size_t relay = ix.start[detail::edge_id(net, net.relay(i), net.receiver(t))];
      for (std::uint64_t q = 0; q < net.transmissions[i]; ++q) out.fixed.set(nn + coded + q, relay + q, minus_one);
    }
  }
  // Bottom-right block B(r_j): decoding coefficients on r_j's incoming
  // unit edges.
  const auto incoming = detail::incoming_units(net, ix, j);
  std::size_t slot = layout.decoding_offset[j];
  for (std::size_t u : incoming)
    for (std::size_t k = 0; k < nn; ++k) out.slots.push_back({nn + u, e_units + k, slot++, false});
  return out;
}

/// Coding slots from the scheme's C_i; decoding slots choose, for each
/// receiver, nN linearly independent incoming symbols (B(r_j) is a 0/1
/// selection). Receivers that cannot decode get a rank-deficient B.
inline Assignment assignment_from_scheme(const MulticastNetwork& net, const LinearSource& src,
                                         const TransmissionScheme& s) {
  check_scheme(src, s);
  if (s.n != net.n) throw Error(Errc::dimension_mismatch, "scheme and network differ in block length");
  const SlotLayout layout = slot_layout(net, src.packets);
  Assignment a(layout.total);
  std::size_t slot = 0;
  for (int i = 0; i < net.m; ++i) {
    if (s.c[i].rows() != net.transmissions[i]) {
      throw Error(Errc::dimension_mismatch, "user " + std::to_string(i + 1) + " sends " +
                                                std::to_string(s.c[i].rows()) + " symbols, network expects " +
                                                std::to_string(net.transmissions[i]));
    }
    for (std::size_t q = 0; q < s.c[i].rows(); ++q)
      for (std::size_t r = 0; r < s.c[i].cols(); ++r) a[slot++] = s.c[i].at(q, r);
  }
  const std::size_t nn = net.n * src.packets;
  for (int j = 0; j < net.m; ++j) {
    // Global coefficient vector of each incoming symbol, in incoming order.
    std::vector<FieldMatrix> parts{field::kron_block(net.n, src.a[j])};
    for (int i = 0; i < net.m; ++i)
      if (i != j) parts.push_back(broadcast_map(src, s, i));
    const FieldMatrix symbols = field::stack(parts, nn, src.p);
    std::size_t base = layout.decoding_offset[j];
    for (std::size_t k = base; k < base + layout.decoding_count[j]; ++k) a[k] = 0;
    std::vector<std::size_t> chosen;
    std::size_t have = 0;
    for (std::size_t u = 0; u < symbols.rows() && have < nn; ++u) {
      chosen.push_back(u);
      std::size_t r = field::rank(field::select_rows(symbols, chosen));
      if (r > have) {
        a[base + u * nn + have] = 1;
        have = r;
      } else {
        chosen.pop_back();
      }
    }
  }
  return a;
}

// --- construction --------------------------------------------------------

struct Construction {
  TransmissionScheme scheme;
  int tries = 0;              // random draws used
  bool exhaustive = false;    // the small-field fallback produced the scheme
  std::uint64_t reduced_n = 1;  // block length after the gcd pre-pass
};

namespace detail {

inline std::uint64_t pow_capped(std::uint64_t base, std::uint64_t e, std::uint64_t cap) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    if (r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

inline TransmissionScheme expand(const TransmissionScheme& small, std::uint64_t copies) {
  TransmissionScheme out{small.n * copies, small.p, {}};
  for (const auto& c : small.c) out.c.push_back(field::kron_block(copies, c));
  return out;
}

}  // namespace detail

/// Draws every C_i uniformly at random, keeps the first draw that passes
/// verification, and for tiny fields falls back to enumerating all slot
/// assignments. The seed fully determines the result.
inline Construction construct_code(const LinearSource& src, const RateVector<Rational>& rates, std::uint64_t n,
                                   std::uint64_t seed, int max_tries = 64) {
  auto problems = sources::validate(src);
  if (!problems.empty()) throw Error(Errc::invalid_input, problems.front());
  const int m = src.users();
  if (src.p <= static_cast<std::uint64_t>(m)) {
    throw Error(Errc::field_too_small, "field size " + std::to_string(src.p) + " must exceed the number of users " +
                                           std::to_string(m));
  }
  if (rates.size() != static_cast<std::size_t>(m)) {
    throw Error(Errc::dimension_mismatch, "rate vector length differs from the number of users");
  }
  std::vector<std::uint64_t> counts = integer_counts(rates, n);
  std::uint64_t g = n;
  for (auto k : counts) g = std::gcd(g, k);
  const std::uint64_t small_n = n / g;
  for (auto& k : counts) k /= g;

  Construction out;
  out.reduced_n = small_n;
  TransmissionScheme cand{small_n, src.p, {}};
  std::size_t slots = 0;
  for (int i = 0; i < m; ++i) {
    cand.c.emplace_back(counts[i], small_n * src.a[i].rows(), src.p);
    slots += counts[i] * small_n * src.a[i].rows();
  }

  std::mt19937_64 rng(seed);
  for (int t = 1; t <= max_tries; ++t) {
    for (auto& c : cand.c)
      for (std::size_t r = 0; r < c.rows(); ++r)
        for (std::size_t k = 0; k < c.cols(); ++k) c.set(r, k, rng() % src.p);
    out.tries = t;
    if (verify_omniscience(src, cand)) {
      out.scheme = detail::expand(cand, g);
      return out;
    }
  }

  constexpr std::uint64_t budget = std::uint64_t{1} << 24;
  if (src.p <= 2 * static_cast<std::uint64_t>(m) && slots <= 16 &&
      detail::pow_capped(src.p, slots, budget) <= budget) {
    std::vector<std::uint64_t> digits(slots, 0);
    while (true) {
      std::size_t d = 0;
      for (auto& c : cand.c)
        for (std::size_t r = 0; r < c.rows(); ++r)
          for (std::size_t k = 0; k < c.cols(); ++k) c.set(r, k, digits[d++]);
      if (verify_omniscience(src, cand)) {
        out.exhaustive = true;
        out.scheme = detail::expand(cand, g);
        return out;
      }
      std::size_t pos = 0;
      while (pos < slots && ++digits[pos] == src.p) digits[pos++] = 0;
      if (pos == slots) break;
    }
  }
  throw Error(Errc::construction_failed, "no valid scheme after " + std::to_string(max_tries) +
                                             " random draws; the rates may be infeasible");
}

// --- encoding and decoding -----------------------------------------------

/// What every user observes and sends for one block W in F_p^{nN}.
struct Transcript {
  std::vector<std::vector<std::uint64_t>> own;        // (I_n (x) A_i) W
  std::vector<std::vector<std::uint64_t>> broadcast;  // T_i W
};

inline Transcript encode(const LinearSource& src, const TransmissionScheme& s, std::span<const std::uint64_t> w) {
  check_scheme(src, s);
  if (w.size() != s.n * src.packets) throw Error(Errc::dimension_mismatch, "W must have n * N symbols");
  Transcript t;
  for (int i = 0; i < s.users(); ++i) {
    t.own.push_back(field::apply(field::kron_block(s.n, src.a[i]), w));
    t.broadcast.push_back(field::apply(broadcast_map(src, s, i), w));
  }
  return t;
}

/// Receiver j's view: its own observations and the other users' broadcasts
/// (its own entry in `broadcast` is ignored).
inline std::vector<std::uint64_t> decode(const LinearSource& src, const TransmissionScheme& s, int j,
                                         std::span<const std::uint64_t> own,
                                         const std::vector<std::vector<std::uint64_t>>& broadcast) {
  check_scheme(src, s);
  if (j < 0 || j >= s.users()) throw Error(Errc::unknown_receiver, "receiver " + std::to_string(j + 1) + " does not exist");
  if (broadcast.size() != static_cast<std::size_t>(s.users())) {
    throw Error(Errc::dimension_mismatch, "one broadcast list per user is required");
  }
  const FieldMatrix system = receiver_system(src, s, j);
  std::vector<std::uint64_t> y(own.begin(), own.end());
  if (y.size() != s.n * src.a[j].rows()) throw Error(Errc::dimension_mismatch, "own observation length");
  for (int i = 0; i < s.users(); ++i) {
    if (i == j) continue;
    if (broadcast[i].size() != s.c[i].rows()) {
      throw Error(Errc::dimension_mismatch, "broadcast of user " + std::to_string(i + 1) + " has wrong length");
    }
    y.insert(y.end(), broadcast[i].begin(), broadcast[i].end());
  }
  for (auto& v : y) v %= src.p;
  if (field::rank(system) != system.cols()) {
    throw Error(Errc::inconsistent_observations, "receiver " + std::to_string(j + 1) + " cannot determine W");
  }
  auto x = field::solve(system, y);
  if (!x) throw Error(Errc::inconsistent_observations, "received symbols contradict each other");
  return *x;
}

// --- greedy row selection --------------------------------------------------

struct RowSelection {
  std::vector<std::vector<std::size_t>> rows;   // per user, admitted row indices of A_i
  std::vector<std::size_t> rates;               // per user; 0 for the receiver itself
  std::vector<std::size_t> rank_sequence;       // running rank after each position
};

/// Walks the users in `ordering` (which must start at j) and admits a row of
/// A_{j(i)} only when it raises the rank of everything admitted so far.
inline RowSelection greedy_row_selection(const LinearSource& src, int j, std::span<const int> ordering) {
  const int m = src.users();
  std::vector<bool> seen(m, false);
  bool perm = ordering.size() == static_cast<std::size_t>(m);
  for (int u : ordering) {
    if (u < 0 || u >= m || seen[u]) perm = false;
    else seen[u] = true;
  }
  if (!perm || ordering.empty() || ordering[0] != j) {
    throw Error(Errc::constraint_violation, "ordering must be a permutation of the users starting at the receiver");
  }
  RowSelection out;
  out.rows.assign(m, {});
  out.rates.assign(m, 0);
  std::vector<FieldMatrix> admitted;
  std::size_t have = 0;
  for (int u : ordering) {
    for (std::size_t r = 0; r < src.a[u].rows(); ++r) {
      std::vector<std::size_t> one{r};
      admitted.push_back(field::select_rows(src.a[u], one));
      std::size_t now = field::rank(field::stack(admitted, src.packets, src.p));
      if (now > have) {
        have = now;
        out.rows[u].push_back(r);
      } else {
        admitted.pop_back();
      }
    }
    if (u != j) out.rates[u] = out.rows[u].size();
    out.rank_sequence.push_back(have);
  }
  return out;
}

}  // namespace omni::netcode
