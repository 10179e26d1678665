#ifndef SPR_CLI_HPP
#define SPR_CLI_HPP

#include <string>

#include "spr/forward.hpp"
#include "spr/recon.hpp"

namespace spr {

struct SimulateOptions {
    std::string gt_path;
    std::string out_dir;
    SimConfig sim{};
};

struct ReconstructOptions {
    std::string manifest_path;
    std::string out_dir;
    ReconConfig recon{};
    bool dump_sampler = false;
    int checkpoint_every = 0;
};

struct EvaluateOptions {
    std::string recon_path;
    std::string gt_path;
    std::string out_dir;
    double fsc_cutoff = 0.143;
    bool cfsc = false;
    int cfsc_n_phi2 = 19;
    double cone_half_angle_deg = 20.0;
    int threads = 1;
};

void run_simulate(const SimulateOptions& opt);
void run_reconstruct(const ReconstructOptions& opt);
void run_evaluate(const EvaluateOptions& opt);

// Full command-line front end (simulate / reconstruct / evaluate).
int run_cli(int argc, const char* const* argv);

}  // namespace spr

#endif
