/*
 * Copyright (c) 2026 The Inhibitor Attention Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cost/cost.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "core/error.hpp"
#include "core/random.hpp"

namespace ihb {

OpCounters closed_form_counts(Variant variant, const HeadShape& s) {
  if (s.n_q == 0 || s.n_k == 0 || s.d == 0 || s.d_v == 0) {
    throw ContractError("closed_form_counts: extents must be >= 1");
  }
  const std::uint64_t nq = s.n_q, nk = s.n_k, d = s.d, dv = s.d_v;
  OpCounters c;
  switch (variant) {
    case Variant::inhibitor:
      c.mults = nq * nk + nq * dv;
      c.adds_subs = nq * nk * d + nq * nk * (d - 1) + nq * (nk - 1) + 2 * nq * nk + nq * dv * (2 * nk) +
                    nq * dv * (2 * nk - 1);
      c.abs_ops = nq * nk * d;
      c.relu_ops = nq * nk + 2 * nk * dv + 2 * nq * nk * dv;
      c.divs = nq;
      return c;
    case Variant::dot_product:
      c.mults = nq * nk * d + nq * nk + nq * nk * dv;
      c.adds_subs = nq * nk * (d - 1) + nq * nk + nq * (nk - 1) + nq * dv * (nk - 1);
      c.exps = nq * nk;
      c.divs = nq * nk;
      return c;
  }
  throw ContractError("closed_form_counts: unknown variant");
}

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.normal();
  return make_tensor({r, c}, std::move(v));
}

}  // namespace

OpCounters instrumented_counts(Variant variant, const HeadShape& s, std::uint64_t seed) {
  if (!instrumentation_enabled()) throw ContractError("instrumentation is disabled");
  Rng rng(seed);
  const Tensor q = random_matrix(s.n_q, s.d, rng);
  const Tensor k = random_matrix(s.n_k, s.d, rng);
  const Tensor v = random_matrix(s.n_k, s.d_v, rng);
  const Tensor gamma = Tensor::vector({rng.uniform(0.5, 1.5)});
  const Tensor eta = Tensor::vector({rng.uniform(0.5, 1.5)});
  const Tensor delta = Tensor::vector({rng.uniform(-0.5, 0.5)});
  NoGradScope ng;
  OpCounters c;
  {
    CountingScope scope(c);
    if (variant == Variant::inhibitor) {
      (void)inhibitor_attention(q, k, v, gamma, eta, delta);
    } else {
      (void)dot_product_attention(q, k, v);
    }
  }
  return c;
}

double CostRow::mult_ratio() const {
  return static_cast<double>(dot_product.mults) / static_cast<double>(inhibitor.mults);
}

std::vector<CostRow> compare_report(const std::vector<HeadShape>& grid) {
  std::vector<CostRow> rows;
  rows.reserve(grid.size());
  for (const auto& s : grid) {
    rows.push_back(CostRow{s, closed_form_counts(Variant::inhibitor, s), closed_form_counts(Variant::dot_product, s)});
  }
  return rows;
}

std::vector<HeadShape> default_grid() {
  std::vector<HeadShape> g;
  for (std::size_t n : {2, 8, 32, 128, 512}) {
    for (std::size_t d : {2, 16, 64}) g.push_back({n, n, d, d});
  }
  return g;
}

namespace {

std::size_t parse_extent(const std::string& v, const std::string& where) {
  std::size_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc{} || r.ptr != v.data() + v.size() || x == 0) {
    throw ConfigError("grid: '" + where + "' needs a positive integer");
  }
  return x;
}

}  // namespace

std::vector<HeadShape> parse_grid(const std::string& text) {
  std::vector<HeadShape> grid;
  std::string norm = text;
  for (char& ch : norm) {
    if (ch == ';' || ch == '\n') ch = ' ';
  }
  std::istringstream tuples(norm);
  std::string tuple;
  while (tuples >> tuple) {
    HeadShape s;
    bool have_n = false, have_d = false, have_dv = false;
    std::istringstream fields(tuple);
    std::string field;
    while (std::getline(fields, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw ConfigError("grid: expected key=value, got '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::size_t v = parse_extent(field.substr(eq + 1), field);
      if (key == "n") {
        s.n_q = s.n_k = v;
        have_n = true;
      } else if (key == "nq") {
        s.n_q = v;
        have_n = true;
      } else if (key == "nk") {
        s.n_k = v;
        have_n = true;
      } else if (key == "d") {
        s.d = v;
        have_d = true;
      } else if (key == "dv") {
        s.d_v = v;
        have_dv = true;
      } else {
        throw ConfigError("grid: unknown key '" + key + "' (use n, nq, nk, d, dv)");
      }
    }
    if (!have_n || !have_d) throw ConfigError("grid: tuple '" + tuple + "' needs n and d");
    if (!have_dv) s.d_v = s.d;
    grid.push_back(s);
  }
  if (grid.empty()) throw ConfigError("grid: no shapes given");
  return grid;
}

namespace {

void csv_line(std::string& out, const char* variant, const HeadShape& s, const OpCounters& c) {
  std::ostringstream os;
  os << variant << ',' << s.n_q << ',' << s.n_k << ',' << s.d << ',' << s.d_v << ',' << c.mults << ','
     << c.adds_subs << ',' << c.abs_ops << ',' << c.relu_ops << ',' << c.exps << ',' << c.divs << '\n';
  out += os.str();
}

}  // namespace

std::string cost_csv(const std::vector<CostRow>& rows) {
  std::string out = std::string(kCostCsvHeader) + "\n";
  for (const auto& r : rows) {
    csv_line(out, "inhibitor", r.shape, r.inhibitor);
    csv_line(out, "dot_product", r.shape, r.dot_product);
  }
  return out;
}

std::string cost_table(const std::vector<CostRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%6s %6s %5s %5s | %14s %14s %8s | %14s %14s\n", "n_q", "n_k", "d", "d_v",
                "mults(inh)", "mults(dot)", "ratio", "exps(dot)", "relu(inh)");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%6zu %6zu %5zu %5zu | %14llu %14llu %8.2f | %14llu %14llu\n", r.shape.n_q,
                  r.shape.n_k, r.shape.d, r.shape.d_v, static_cast<unsigned long long>(r.inhibitor.mults),
                  static_cast<unsigned long long>(r.dot_product.mults), r.mult_ratio(),
                  static_cast<unsigned long long>(r.dot_product.exps),
                  static_cast<unsigned long long>(r.inhibitor.relu_ops));
    out += buf;
  }
  return out;
}

std::vector<CostRow> parse_cost_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kCostCsvHeader) throw InputError("cost CSV: unexpected header");
  std::vector<CostRow> rows;
  std::map<std::string, std::size_t> pending;
  auto num = [](const std::string& f) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
    if (r.ec != std::errc{} || r.ptr != f.data() + f.size()) throw InputError("cost CSV: bad number '" + f + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw InputError("cost CSV: expected 11 fields");
    HeadShape s{num(f[1]), num(f[2]), num(f[3]), num(f[4])};
    OpCounters c{num(f[5]), num(f[6]), num(f[7]), num(f[8]), num(f[9]), num(f[10])};
    const std::string key = f[1] + "," + f[2] + "," + f[3] + "," + f[4];
    auto it = pending.find(key);
    if (it == pending.end()) {
      pending[key] = rows.size();
      rows.push_back(CostRow{s, {}, {}});
      it = pending.find(key);
    }
    auto& row = rows[it->second];
    if (f[0] == "inhibitor") {
      row.inhibitor = c;
    } else if (f[0] == "dot_product") {
      row.dot_product = c;
    } else {
      throw InputError("cost CSV: unknown variant '" + f[0] + "'");
    }
  }
  return rows;
}

}  // namespace ihb
