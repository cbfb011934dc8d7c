#pragma once

#include <iosfwd>

#include "gpatt/job.hpp"
#include "gpatt/manifest.hpp"

namespace gpatt::cli {

// Each command writes its artifacts into job.out and records them in the
// manifest. Failures propagate as exceptions after partial artifacts are written.
void run_train(const Job& job, Manifest& manifest, std::ostream& log);
void run_predict(const Job& job, Manifest& manifest, std::ostream& log);
void run_inpaint(const Job& job, Manifest& manifest, std::ostream& log);
void run_synth(const Job& job, Manifest& manifest, std::ostream& log);
void run_spectrum(const Job& job, Manifest& manifest, std::ostream& log);
void run_stress(const Job& job, Manifest& manifest, std::ostream& log);

/// Validates, dispatches and writes manifest.json. Returns the process exit
/// code: 0 iff every requested artifact was written.
int run_job(const Job& job, std::ostream& log);

}  // namespace gpatt::cli
