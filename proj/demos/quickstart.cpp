// Evolve h = 1 + 0.1 cos 2theta, print a few invariants, normalize the result.

#include <cstdio>

#include "caflow/flow.hpp"
#include "caflow/sl2.hpp"

int main() {
  using namespace caflow;
  const SupportCurve h0 = make_fourier(FourierSpec{1, {{0.1, 0}}}, 256);
  const ScalarInvariants inv0 = analyze(h0).invariants;
  std::printf("A0 = %.12Lf  E0 = %.6Le  script_L0 = %.6Le\n", inv0.area, inv0.energy, inv0.script_L);

  FlowParams params;
  const FlowTrajectory tr = run(h0, params, 100);
  for (const MonitorRecord& rec : tr.records) {
    std::printf("t = %-10.4Lg E = %-12.4Le santalo = %.12Lf\n", rec.t, rec.invariants.energy, rec.invariants.santalo);
  }
  std::printf("termination: %s after %ld steps\n", to_string(tr.termination), tr.steps);

  const NormalizationResult norm = normalize(tr.final_curve());
  std::printf("sigma limit %.12Lf, normalized radius %.12Lf, roundness %.2Le\n", sigma_limit_value(tr.area0),
              norm.normalized.h().mean(), norm.roundness);
}
