#ifndef CDHOM_SERIES_HPP
#define CDHOM_SERIES_HPP

#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cdhom/solver.hpp"

// Convergence-series bookkeeping: solve a sequence of problems and the limit
// problem, pair solution and flux differences against fixed probe families,
// and emit deterministic CSV/JSON tables.

namespace cdhom {

// Probe vectors for the three monitored quantities. Solution probes live on
// the face space, curl-flux probes on edges, div-flux probes on cells.
struct DeviationProbes {
  std::vector<std::pair<std::string, VecC>> solution;
  std::vector<std::pair<std::string, VecC>> curl_flux;
  std::vector<std::pair<std::string, VecC>> div_flux;

  bool empty() const {
    return solution.empty() && curl_flux.empty() && div_flux.empty();
  }
};

struct SeriesEntry {
  int n = 0;
  std::string probe_id;
  std::string kind;  // solution | curl_flux | div_flux
  double deviation = 0.0;
};

struct SolveSummary {
  int n = 0;
  bool ok = false;
  std::string error;
  double residual_f = 0.0;
  double residual_g = 0.0;
  double norm_u = 0.0;
  double estimate_slack = 0.0;
  bool estimate_holds = false;
};

struct SeriesReport {
  std::vector<SeriesEntry> rows;
  std::vector<SolveSummary> solves;
  SolveSummary limit_solve;
};

using CurlDivSolver = std::function<Solution(const Coefficient& a,
                                             const Coefficient& b)>;

namespace detail {

inline void append_deviation_rows(std::vector<SeriesEntry>& rows, int n,
                                  const Solution& sol, const Solution& lim,
                                  const DeviationProbes& probes,
                                  const DiscreteComplex& dc) {
  VecC du = sol.u.values - lim.u.values;
  VecC dfc = sol.flux_curl - lim.flux_curl;
  VecC dfd = sol.flux_div - lim.flux_div;
  for (const auto& [id, w] : probes.solution)
    rows.push_back({n, id, "solution", std::abs(dc.faces->inner(du, w))});
  for (const auto& [id, w] : probes.curl_flux)
    rows.push_back({n, id, "curl_flux", std::abs(dc.edges->inner(dfc, w))});
  for (const auto& [id, w] : probes.div_flux)
    rows.push_back({n, id, "div_flux", std::abs(dc.cells->inner(dfd, w))});
}

}  // namespace detail

// Solves the limit problem and each member of the sequence, recording probe
// pairings of u_n - u and of both flux differences. Per-n solver failures
// are recorded and the series continues; a failing limit solve aborts.
inline SeriesReport run_convergence_series(
    const DiscreteComplex& dc,
    const std::vector<std::pair<CoefficientPtr, CoefficientPtr>>& sequence,
    const std::pair<CoefficientPtr, CoefficientPtr>& limit,
    const std::vector<int>& ns, const CurlDivSolver& solver,
    const DeviationProbes& probes, int jobs = 1) {
  if (probes.empty())
    throw std::invalid_argument("run_convergence_series: empty probe set");
  if (sequence.size() != ns.size())
    throw std::invalid_argument(
        "run_convergence_series: sequence/index length mismatch");

  SeriesReport rep;
  Solution lim = solver(*limit.first, *limit.second);
  rep.limit_solve = {0, true, "", lim.residual_f, lim.residual_g, lim.norm_u,
                     0.0, false};

  std::vector<std::optional<Solution>> sols(sequence.size());
  std::vector<std::string> errors(sequence.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= sequence.size()) return;
      try {
        sols[i] = solver(*sequence[i].first, *sequence[i].second);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < sequence.size(); ++i) {
    SolveSummary s;
    s.n = ns[i];
    if (sols[i]) {
      s.ok = true;
      s.residual_f = sols[i]->residual_f;
      s.residual_g = sols[i]->residual_g;
      s.norm_u = sols[i]->norm_u;
      detail::append_deviation_rows(rep.rows, ns[i], *sols[i], lim, probes, dc);
    } else {
      s.error = errors[i];
    }
    rep.solves.push_back(std::move(s));
  }
  return rep;
}

inline std::string series_csv(const SeriesReport& rep) {
  std::ostringstream os;
  os << "n,probe_id,kind,deviation\n";
  os << std::setprecision(17);
  for (const auto& r : rep.rows)
    os << r.n << ',' << r.probe_id << ',' << r.kind << ',' << r.deviation
       << '\n';
  return os.str();
}

// Max deviation ratio between the last and first n, per kind, over probes
// present at both ends. Returns +inf when an initial deviation is zero while
// the final one is not.
inline double deviation_ratio(const SeriesReport& rep, const std::string& kind,
                              int n_first, int n_last) {
  double worst = 0.0;
  for (const auto& r0 : rep.rows) {
    if (r0.n != n_first || r0.kind != kind) continue;
    for (const auto& r1 : rep.rows) {
      if (r1.n != n_last || r1.kind != kind || r1.probe_id != r0.probe_id)
        continue;
      if (r0.deviation == 0.0) {
        if (r1.deviation > 0.0)
          return std::numeric_limits<double>::infinity();
        continue;
      }
      worst = std::max(worst, r1.deviation / r0.deviation);
    }
  }
  return worst;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
}

}  // namespace cdhom

#endif  // CDHOM_SERIES_HPP
