#include "spr/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "spr/errors.hpp"
#include "spr/eval.hpp"
#include "spr/io.hpp"
#include "spr/threading.hpp"

namespace fs = std::filesystem;

namespace spr {

namespace {

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path);
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require_artifact(const std::string& path) {
    if (!fs::exists(path) || fs::file_size(path) == 0) throw IoError("artifact missing: " + path);
}

void echo_config(const std::string& out_dir, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string text;
    for (const auto& [k, v] : kv) text += k + " " + v + "\n";
    write_text((fs::path(out_dir) / "config.txt").string(), text);
}

void write_poses_csv(const std::string& path, const std::vector<Pose>& poses) {
    std::string text = "view,phi1,phi2,psi,tx,ty,tz\n";
    for (std::size_t l = 0; l < poses.size(); ++l) {
        const Pose& p = poses[l];
        text += std::to_string(l) + ',' + fmt17(p.orientation.phi1) + ',' + fmt17(p.orientation.phi2) +
                ',' + fmt17(p.orientation.psi) + ',' + fmt17(p.translation[0]) + ',' +
                fmt17(p.translation[1]) + ',' + fmt17(p.translation[2]) + '\n';
    }
    write_text(path, text);
}

void write_energy_csv(const std::string& path, const std::vector<double>& trace) {
    std::string text = "epoch,mean_energy\n";
    for (std::size_t e = 0; e < trace.size(); ++e)
        text += std::to_string(e + 1) + ',' + fmt17(trace[e]) + '\n';
    write_text(path, text);
}

void append_sampler_csv(std::ofstream& out, const Reconstructor& rec) {
    const Sampler& sampler = rec.sampler();
    for (int l = 0; l < sampler.n_views(); ++l) {
        const auto& qd = sampler.q_d(l);
        for (std::size_t j = 0; j < qd.size(); ++j)
            out << rec.epoch() << ',' << l << ',' << fmt17(sampler.alpha()) << ",d," << j << ','
                << fmt17(qd[j]) << '\n';
        const auto& qpsi = sampler.q_psi(l);
        for (std::size_t i = 0; i < qpsi.size(); ++i)
            out << rec.epoch() << ',' << l << ',' << fmt17(sampler.alpha()) << ",psi," << i << ','
                << fmt17(qpsi[i]) << '\n';
    }
}

}  // namespace

void run_simulate(const SimulateOptions& opt) {
    opt.sim.validate();
    const Volume gt = read_volume(opt.gt_path);
    fs::create_directories(opt.out_dir);

    const ViewSet set = generate_dataset(gt, opt.sim);
    const std::string manifest = save_dataset(set, opt.out_dir, &opt.sim);

    echo_config(opt.out_dir, {{"gt", opt.gt_path},
                              {"out", opt.out_dir},
                              {"views", std::to_string(opt.sim.n_views)},
                              {"noise-sigma", fmt17(opt.sim.noise_sigma)},
                              {"dol-spots", std::to_string(opt.sim.dol_spots)},
                              {"spot-sigma-lo", fmt17(opt.sim.spot_sigma_lo)},
                              {"spot-sigma-hi", fmt17(opt.sim.spot_sigma_hi)},
                              {"spot-intensity-lo", fmt17(opt.sim.spot_intensity_lo)},
                              {"spot-intensity-hi", fmt17(opt.sim.spot_intensity_hi)},
                              {"t-max-frac", fmt17(opt.sim.t_max_frac)},
                              {"sigma-xy", fmt17(opt.sim.psf.sigma_xy)},
                              {"sigma-z", fmt17(opt.sim.psf.sigma_z)},
                              {"seed", std::to_string(opt.sim.seed)},
                              {"force-identity-poses", opt.sim.force_identity_poses ? "1" : "0"}});

    require_artifact(manifest);
    require_artifact((fs::path(opt.out_dir) / "psf.spfv").string());
}

void run_reconstruct(const ReconstructOptions& opt) {
    opt.recon.validate();
    LoadReport report;
    const ViewSet set = load_dataset(opt.manifest_path, &report);
    fs::create_directories(opt.out_dir);
    for (const auto& note : report.notes) std::cerr << "note: " << note << '\n';

    Reconstructor rec(set, opt.recon);

    std::ofstream sampler_csv;
    if (opt.dump_sampler && !opt.recon.known_poses) {
        sampler_csv.open((fs::path(opt.out_dir) / "sampler.csv").string(), std::ios::trunc);
        sampler_csv << "epoch,view,alpha,kind,index,weight\n";
    }
    rec.set_epoch_callback([&](const Reconstructor& r) {
        if (sampler_csv.is_open()) append_sampler_csv(sampler_csv, r);
        if (opt.checkpoint_every > 0 && r.epoch() % opt.checkpoint_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d", r.epoch());
            const fs::path ckdir = fs::path(opt.out_dir) / name;
            fs::create_directories(ckdir);
            const ReconResult snapshot = r.result();
            write_volume(snapshot.volume, (ckdir / "volume.spfv").string());
            write_poses_csv((ckdir / "poses.csv").string(), snapshot.poses);
        }
    });

    rec.run();
    const ReconResult result = rec.result();

    const std::string recon_path = (fs::path(opt.out_dir) / "recon.spfv").string();
    write_volume(result.volume, recon_path);
    write_poses_csv((fs::path(opt.out_dir) / "poses.csv").string(), result.poses);
    write_energy_csv((fs::path(opt.out_dir) / "energy.csv").string(),
                     result.diagnostics.epoch_mean_energy);

    echo_config(opt.out_dir,
                {{"dataset", opt.manifest_path},
                 {"out", opt.out_dir},
                 {"epochs", std::to_string(opt.recon.epochs)},
                 {"m-d", std::to_string(opt.recon.m_d)},
                 {"m-psi", std::to_string(opt.recon.m_psi)},
                 {"n-d", std::to_string(opt.recon.n_d)},
                 {"n-psi", std::to_string(opt.recon.n_psi)},
                 {"alpha-r", fmt17(opt.recon.alpha_r)},
                 {"beta-d", fmt17(opt.recon.beta_d)},
                 {"beta-psi", fmt17(opt.recon.beta_psi)},
                 {"mu", opt.recon.mu ? fmt17(*opt.recon.mu) : "auto"},
                 {"seed", std::to_string(opt.recon.seed)},
                 {"known-poses", opt.recon.known_poses ? "1" : "0"},
                 {"threads", std::to_string(opt.recon.threads)},
                 {"early-stop", opt.recon.early_stop ? "1" : "0"},
                 {"dump-sampler", opt.dump_sampler ? "1" : "0"},
                 {"checkpoint-every", std::to_string(opt.checkpoint_every)}});

    require_artifact(recon_path);
    read_volume(recon_path);  // validates the written artifact
    require_artifact((fs::path(opt.out_dir) / "poses.csv").string());
    require_artifact((fs::path(opt.out_dir) / "energy.csv").string());
}

void run_evaluate(const EvaluateOptions& opt) {
    const Volume recon = read_volume(opt.recon_path);
    const Volume gt = read_volume(opt.gt_path);
    if (recon.dims != gt.dims) throw ShapeError("evaluate: recon and ground truth dims differ");
    fs::create_directories(opt.out_dir);

    const RegistrationResult reg = register_to_ground_truth(recon, gt, opt.threads);
    const double ssim = ssim3d(reg.aligned, gt);
    const FscCurve curve = fsc(reg.aligned, gt, opt.fsc_cutoff);
    write_fsc_csv(curve, (fs::path(opt.out_dir) / "fsc.csv").string());

    nlohmann::json metrics;
    metrics["ssim"] = ssim;
    metrics["fsc_resolution"] = curve.cutoff_resolution;
    metrics["fsc_crossed_cutoff"] = curve.crossed;
    metrics["mi"] = reg.mi;
    metrics["pose"] = {{"phi1", reg.pose.orientation.phi1}, {"phi2", reg.pose.orientation.phi2},
                       {"psi", reg.pose.orientation.psi},   {"tx", reg.pose.translation[0]},
                       {"ty", reg.pose.translation[1]},     {"tz", reg.pose.translation[2]}};

    if (opt.cfsc) {
        const CfscMap map = conical_fsc(reg.aligned, gt, opt.cfsc_n_phi2,
                                        opt.cone_half_angle_deg * M_PI / 180.0, opt.fsc_cutoff,
                                        opt.threads);
        write_cfsc_csv(map, (fs::path(opt.out_dir) / "cfsc.csv").string());
    }

    write_text((fs::path(opt.out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");

    echo_config(opt.out_dir, {{"recon", opt.recon_path},
                              {"gt", opt.gt_path},
                              {"out", opt.out_dir},
                              {"fsc-cutoff", fmt17(opt.fsc_cutoff)},
                              {"cfsc", opt.cfsc ? "1" : "0"},
                              {"cfsc-n-phi2", std::to_string(opt.cfsc_n_phi2)},
                              {"cone-half-angle-deg", fmt17(opt.cone_half_angle_deg)},
                              {"threads", std::to_string(opt.threads)}});

    require_artifact((fs::path(opt.out_dir) / "metrics.json").string());
    require_artifact((fs::path(opt.out_dir) / "fsc.csv").string());
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Single-particle reconstruction for convolutional fluorescence microscopy"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file (sections per subcommand)");

    SimulateOptions sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Generate a synthetic dataset from a ground-truth volume");
    cmd_sim->fallthrough();
    cmd_sim->add_option("--gt", sim.gt_path, "Ground-truth volume (.spfv)")->required();
    cmd_sim->add_option("--out", sim.out_dir, "Output dataset directory")->required();
    cmd_sim->add_option("--views", sim.sim.n_views, "Number of views");
    cmd_sim->add_option("--noise-sigma", sim.sim.noise_sigma, "Additive Gaussian noise std");
    cmd_sim->add_option("--dol-spots", sim.sim.dol_spots, "Subtracted Gaussian spots per view");
    cmd_sim->add_option("--spot-sigma-lo", sim.sim.spot_sigma_lo, "Spot sigma lower bound (fraction of size)");
    cmd_sim->add_option("--spot-sigma-hi", sim.sim.spot_sigma_hi, "Spot sigma upper bound (fraction of size)");
    cmd_sim->add_option("--spot-intensity-lo", sim.sim.spot_intensity_lo, "Spot intensity lower bound");
    cmd_sim->add_option("--spot-intensity-hi", sim.sim.spot_intensity_hi, "Spot intensity upper bound");
    cmd_sim->add_option("--t-max-frac", sim.sim.t_max_frac, "Translation range (fraction of size)");
    cmd_sim->add_option("--sigma-xy", sim.sim.psf.sigma_xy, "PSF lateral sigma (voxels)");
    cmd_sim->add_option("--sigma-z", sim.sim.psf.sigma_z, "PSF axial sigma (voxels)");
    cmd_sim->add_option("--seed", sim.sim.seed, "Generator seed");
    cmd_sim->add_flag("--force-identity-poses", sim.sim.force_identity_poses,
                      "Image every view at the identity pose");

    ReconstructOptions rec;
    rec.recon.threads = hardware_threads();
    auto* cmd_rec = app.add_subcommand("reconstruct", "Run the reconstruction on a dataset");
    cmd_rec->fallthrough();
    cmd_rec->add_option("--dataset", rec.manifest_path, "Dataset manifest path")->required();
    cmd_rec->add_option("--out", rec.out_dir, "Output directory")->required();
    cmd_rec->add_option("--epochs", rec.recon.epochs, "Number of epochs");
    cmd_rec->add_option("--m-d", rec.recon.m_d, "Axis grid size");
    cmd_rec->add_option("--m-psi", rec.recon.m_psi, "In-axis angle grid size");
    cmd_rec->add_option("--n-d", rec.recon.n_d, "Axis candidates per iteration");
    cmd_rec->add_option("--n-psi", rec.recon.n_psi, "Angle candidates per iteration");
    cmd_rec->add_option("--alpha-r", rec.recon.alpha_r, "Uniform-mixture annealing ratio");
    cmd_rec->add_option("--beta-d", rec.recon.beta_d, "Axis kernel width parameter");
    cmd_rec->add_option("--beta-psi", rec.recon.beta_psi, "Angle kernel width parameter");
    double mu_flag = -1.0;
    cmd_rec->add_option("--mu", mu_flag, "SGD step size (omit for auto)");
    cmd_rec->add_option("--seed", rec.recon.seed, "Run seed");
    cmd_rec->add_flag("--known-poses", rec.recon.known_poses, "Use manifest poses, skip pose search");
    cmd_rec->add_option("--threads", rec.recon.threads, "Worker threads (1 = reproducibility mode)");
    cmd_rec->add_flag("--early-stop", rec.recon.early_stop, "Stop when epoch energy stalls");
    cmd_rec->add_flag("--dump-sampler", rec.dump_sampler, "Write per-epoch sampling distributions CSV");
    cmd_rec->add_option("--checkpoint-every", rec.checkpoint_every, "Checkpoint period in epochs (0 = off)");

    EvaluateOptions ev;
    ev.threads = hardware_threads();
    auto* cmd_ev = app.add_subcommand("evaluate", "Register a reconstruction to ground truth and report metrics");
    cmd_ev->fallthrough();
    cmd_ev->add_option("--recon", ev.recon_path, "Reconstructed volume (.spfv)")->required();
    cmd_ev->add_option("--gt", ev.gt_path, "Ground-truth volume (.spfv)")->required();
    cmd_ev->add_option("--out", ev.out_dir, "Output directory")->required();
    cmd_ev->add_option("--fsc-cutoff", ev.fsc_cutoff, "FSC resolution cutoff");
    cmd_ev->add_flag("--cfsc", ev.cfsc, "Also compute the conical FSC map");
    cmd_ev->add_option("--cfsc-n-phi2", ev.cfsc_n_phi2, "Inclination samples of the cFSC map");
    cmd_ev->add_option("--cone-half-angle-deg", ev.cone_half_angle_deg, "cFSC cone half-angle (degrees)");
    cmd_ev->add_option("--threads", ev.threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (cmd_sim->parsed()) run_simulate(sim);
        if (cmd_rec->parsed()) {
            if (cmd_rec->count("--mu") > 0) rec.recon.mu = mu_flag;
            run_reconstruct(rec);
        }
        if (cmd_ev->parsed()) run_evaluate(ev);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace spr
