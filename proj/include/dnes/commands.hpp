#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnes/interval_set.hpp"
#include "dnes/scenario.hpp"
#include "dnes/simulator.hpp"

namespace dnes {

// Ordered "key = value" lines; intervals use IntervalSet syntax.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, const Vectord& value);
  void set(const std::string& key, const Matrixd& value);
  void set(const std::string& key, const IntervalSet& value);
  void set_flag(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  // first failure wins; later ones are still listed under their own key
  void fail(const std::string& block, const Error& err);

  int exit_code() const { return code_; }
  std::optional<std::string> get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string str() const;
  static Report parse(const std::string& text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  int code_ = 0;
};

std::string status_name(int code);

Report analyze(const Scenario& scn);

struct SimulationRun {
  Trajectory trajectory;
  Report summary;
};

// full or averaged loop per [sim] mode; an unstable run reports exit code 4
SimulationRun run_simulation(const Scenario& scn);

struct SweepRow {
  double value = 0;
  int code = 0;
  bool unstable = false;
  Vectord x, J, delta;
  // equilibrium predicted by the analysis at the run's final delta, quadratic games only
  Vectord x_dne, J_dne;
  std::string error;
};

std::vector<SweepRow> run_sweep(const Scenario& scn, int threads);
void write_sweep_csv(std::ostream& os, const Scenario& scn, const std::vector<SweepRow>& rows);

// analyze|simulate|sweep on a scenario file; returns the exit status
int run_command(const std::string& command, const std::string& path, const std::string& out_dir,
                const std::vector<std::string>& overrides, int threads, std::ostream& out, std::ostream& err);

}  // namespace dnes
