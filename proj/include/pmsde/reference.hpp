#pragma once

#include "pmsde/integrators.hpp"

namespace pmsde::reference {

/// Plain single-threaded ensemble sampler, written independently of the
/// OpenMP kernel. Tests and the benchmark compare the two for bit-identical
/// output; keep this one simple.
EnsembleResult run_ensemble_serial(const SdeModel& model, const EnsembleRequest& req);

} // namespace pmsde::reference
