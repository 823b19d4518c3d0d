// Runs the verification suite on the desk config and prints one line per criterion.

#include <cstdio>
#include <exception>

#include "chq/harness.hpp"

int main() {
  using namespace chq;
  try {
    ExperimentConfig cfg = load_config(CHQ_DESK_CONFIG);
    cfg.out_dir = CHQ_ACCEPT_OUT;
    const VerifyReport rep = run_verify(cfg);
    for (const CheckRow& r : rep.checks)
      std::printf("%s %2d %s (measured %.4g, threshold %.4g) %s\n", status_name(r.status), r.id, r.name.c_str(),
                  r.measured, r.threshold, r.detail.c_str());
    write_atomic(cfg.out_dir + "/verify.csv", format_checks(rep.checks));
    write_atomic(cfg.out_dir + "/report.csv", format_report(rep.rows));
    return all_pass(rep.checks) ? 0 : 1;
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance run aborted: %s\n", e.what());
    return 1;
  }
}
