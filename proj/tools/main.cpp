// Command-line driver: dataset generation, model training, attack campaigns,
// metric evaluation, transfer and robustness harnesses, and report rendering.
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "semadv/campaign.hpp"
#include "semadv/image_io.hpp"
#include "semadv/losses.hpp"
#include "semadv/perturb.hpp"
#include "semadv/training.hpp"

namespace fs = std::filesystem;
using namespace semadv;

namespace {

// --out collision policy: refuse on a non-empty existing directory unless --force
void prepare_out_dir(const std::string& out, bool force) {
    if (fs::exists(out) && !fs::is_empty(out)) {
        if (!force) throw std::invalid_argument("output directory '" + out + "' is not empty (use --force to overwrite)");
        fs::remove_all(out);
    }
    fs::create_directories(out);
}

ClassifierConfig classifier_arch_for_role(const std::string& role, const ToyDataset& ds, uint64_t seed) {
    ClassifierConfig cfg;
    cfg.in_channels = ds.channels;
    cfg.height = ds.height;
    cfg.width = ds.width;
    cfg.num_classes = ds.num_classes;
    if (role == "target" || role == "extractor")
        cfg.widths = {16, 32, 64, 64};
    else if (role == "surrogate")
        cfg.widths = {12, 24, 48, 48};
    else if (role == "victim")
        cfg.widths = {20, 40, 80, 80};
    else
        throw std::invalid_argument("role must be target|surrogate|extractor|victim, got '" + role + "'");
    cfg.init_seed = derive_seed(seed, fnv1a(role.data(), role.size()));
    return cfg;
}

struct CliOverrides {
    std::optional<std::string> mode, box, strategy, method;
    std::optional<double> lambda_weight, gamma;
    std::optional<int> steps_df, steps_ft, steps_sp, count, jobs;
    std::optional<uint64_t> seed;

    void apply(CampaignConfig& cfg) const {
        if (seed) {
            cfg.seed = *seed;
            cfg.seed_defaulted = false;
            cfg.st.seed = *seed;
            cfg.lm.seed = *seed;
        }
        if (mode) cfg.st.mode = mode_from_string(*mode);
        if (box) cfg.st.box = box_from_string(*box);
        if (lambda_weight) cfg.st.lambda_weight = *lambda_weight;
        if (strategy) cfg.lm.strategy = strategy_from_string(*strategy);
        if (method) cfg.lm.method = method_from_string(*method);
        if (gamma) cfg.lm.gamma = *gamma;
        if (steps_df) {
            cfg.st.steps_df = *steps_df;
            cfg.lm.steps_df = *steps_df;
        }
        if (steps_ft) cfg.st.steps_ft = *steps_ft;
        if (steps_sp) {
            cfg.st.steps_sp = *steps_sp;
            cfg.lm.steps_sp = *steps_sp;
        }
        if (count) cfg.count = *count;
        if (jobs) cfg.jobs = *jobs;
        cfg.validate();
    }
};

void add_campaign_overrides(CLI::App* cmd, CliOverrides& ov) {
    cmd->add_option("--mode", ov.mode, "latent|model|both");
    cmd->add_option("--box", ov.box, "white|black");
    cmd->add_option("--strategy", ov.strategy, "source|target|sum");
    cmd->add_option("--method", ov.method, "gradcam|simplefullgrad");
    cmd->add_option("--lambda", ov.lambda_weight, "perceptual loss weight");
    cmd->add_option("--gamma", ov.gamma, "threshold decrement constant");
    cmd->add_option("--steps-df", ov.steps_df, "diffusion step count");
    cmd->add_option("--steps-ft", ov.steps_ft, "fine-tune step count");
    cmd->add_option("--steps-sp", ov.steps_sp, "sampling step count");
    cmd->add_option("--count", ov.count, "number of attacked images");
    cmd->add_option("--jobs", ov.jobs, "parallel attacks");
    cmd->add_option("--seed", ov.seed, "campaign seed");
}

int run_campaign_command(const std::string& config_path, const std::string& out, bool force, const CliOverrides& ov,
                         const std::string& forced_attack) {
    CampaignConfig cfg = parse_config_file(config_path);
    if (!forced_attack.empty()) cfg.attack = forced_attack;
    ov.apply(cfg);
    prepare_out_dir(out, force);
    MetricsReport report = run_campaign(cfg, out);
    std::cout << render_summary_table({report});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion-based semantic adversarial attack workbench"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate the toy dataset");
    uint64_t gen_seed = 7;
    int gen_classes = 4, gen_count = 400, gen_size = 16, gen_channels = 3;
    std::string gen_out;
    bool gen_force = false;
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--classes", gen_classes, "number of classes (2..4)");
    gen->add_option("--count", gen_count, "number of images");
    gen->add_option("--size", gen_size, "image height/width");
    gen->add_option("--channels", gen_channels, "1 or 3");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_flag("--force", gen_force, "overwrite a non-empty output directory");

    // train-classifier
    auto* trc = app.add_subcommand("train-classifier", "train a classifier role");
    std::string trc_data, trc_role = "target", trc_out, trc_opt = "sgd";
    uint64_t trc_seed = 11;
    int trc_epochs = 30, trc_batch = 16;
    double trc_lr = 0.05;
    bool trc_force = false;
    trc->add_option("--data", trc_data, "dataset directory")->required();
    trc->add_option("--role", trc_role, "target|surrogate|extractor|victim");
    trc->add_option("--seed", trc_seed, "training seed");
    trc->add_option("--epochs", trc_epochs, "training epochs");
    trc->add_option("--lr", trc_lr, "learning rate");
    trc->add_option("--batch", trc_batch, "batch size");
    trc->add_option("--optimizer", trc_opt, "sgd|adam");
    trc->add_option("--out", trc_out, "output directory")->required();
    trc->add_flag("--force", trc_force, "overwrite existing checkpoint");

    // train-denoiser
    auto* trd = app.add_subcommand("train-denoiser", "train the noise-prediction model");
    std::string trd_data, trd_out, trd_opt = "sgd";
    uint64_t trd_seed = 13;
    int trd_epochs = 40, trd_batch = 8, trd_base = 32;
    double trd_lr = 1e-3;
    bool trd_force = false;
    trd->add_option("--data", trd_data, "dataset directory")->required();
    trd->add_option("--seed", trd_seed, "training seed");
    trd->add_option("--epochs", trd_epochs, "training epochs");
    trd->add_option("--lr", trd_lr, "learning rate");
    trd->add_option("--batch", trd_batch, "batch size");
    trd->add_option("--base-width", trd_base, "first-level channel width");
    trd->add_option("--optimizer", trd_opt, "sgd|adam");
    trd->add_option("--out", trd_out, "output directory")->required();
    trd->add_flag("--force", trd_force, "overwrite existing checkpoint");

    // attack-st / attack-lm / evaluate
    std::string ast_config, ast_out;
    bool ast_force = false;
    CliOverrides ast_ov;
    auto* ast = app.add_subcommand("attack-st", "run a transformation attack campaign");
    ast->add_option("--config", ast_config, "campaign config JSON")->required();
    ast->add_option("--out", ast_out, "output directory")->required();
    ast->add_flag("--force", ast_force, "overwrite a non-empty output directory");
    add_campaign_overrides(ast, ast_ov);

    std::string alm_config, alm_out;
    bool alm_force = false;
    CliOverrides alm_ov;
    auto* alm = app.add_subcommand("attack-lm", "run a masking attack campaign");
    alm->add_option("--config", alm_config, "campaign config JSON")->required();
    alm->add_option("--out", alm_out, "output directory")->required();
    alm->add_flag("--force", alm_force, "overwrite a non-empty output directory");
    add_campaign_overrides(alm, alm_ov);

    std::string ev_config, ev_out, ev_rerun;
    bool ev_force = false;
    CliOverrides ev_ov;
    auto* ev = app.add_subcommand("evaluate", "run the campaign written in a config, or re-run a manifest");
    ev->add_option("--config", ev_config, "campaign config JSON");
    ev->add_option("--rerun", ev_rerun, "manifest.json of a finished campaign");
    ev->add_option("--out", ev_out, "output directory")->required();
    ev->add_flag("--force", ev_force, "overwrite a non-empty output directory");
    add_campaign_overrides(ev, ev_ov);

    // transfer
    auto* tr = app.add_subcommand("transfer", "evaluate saved adversarial images against victim classifiers");
    std::string tr_campaign, tr_out;
    std::vector<std::string> tr_victims;
    bool tr_force = false;
    tr->add_option("--campaign", tr_campaign, "campaign output directory")->required();
    tr->add_option("--victims", tr_victims, "victim classifier checkpoints")->required();
    tr->add_option("--out", tr_out, "output directory")->required();
    tr->add_flag("--force", tr_force, "overwrite a non-empty output directory");

    // robustness
    auto* rb = app.add_subcommand("robustness", "accuracy of clean and adversarial images under natural perturbations");
    std::string rb_campaign, rb_target, rb_data, rb_kind = "gaussian_blur", rb_out;
    double rb_strength = 1.0;
    bool rb_force = false;
    rb->add_option("--campaign", rb_campaign, "campaign output directory")->required();
    rb->add_option("--target", rb_target, "target classifier checkpoint")->required();
    rb->add_option("--data", rb_data, "dataset directory")->required();
    rb->add_option("--kind", rb_kind, "jpeg_like|gaussian_blur|defocus_blur|brightness");
    rb->add_option("--strength", rb_strength, "perturbation strength");
    rb->add_option("--out", rb_out, "output directory")->required();
    rb->add_flag("--force", rb_force, "overwrite a non-empty output directory");

    // report
    auto* rp = app.add_subcommand("report", "render the summary table and difference images");
    std::vector<std::string> rp_reports;
    std::string rp_out, rp_data, rp_campaign;
    bool rp_force = false;
    rp->add_option("--reports", rp_reports, "report.json files")->required();
    rp->add_option("--data", rp_data, "dataset directory (enables difference images)");
    rp->add_option("--campaign", rp_campaign, "campaign directory holding the adversarial images");
    rp->add_option("--out", rp_out, "output directory")->required();
    rp->add_flag("--force", rp_force, "overwrite a non-empty output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed()) {
            prepare_out_dir(gen_out, gen_force);
            ToyDataset ds = gen_toy_dataset(gen_seed, gen_classes, gen_count, gen_size, gen_size, gen_channels);
            write_dataset_dir(ds, gen_out);
            std::cout << "dataset: " << gen_count << " images, " << gen_classes << " classes, fingerprint " << std::hex
                      << ds.fingerprint() << std::dec << "\n";
            return 0;
        }
        if (trc->parsed()) {
            prepare_out_dir(trc_out, trc_force);
            ToyDataset ds = load_dataset_dir(trc_data);
            DatasetSplit split = split_dataset(ds);
            ClassifierConfig arch = classifier_arch_for_role(trc_role, ds, trc_seed);
            TrainConfig tc{trc_epochs, trc_lr, trc_batch, trc_seed, trc_opt};
            ClassifierTrainResult res = train_classifier(ds, split, arch, tc);
            const std::string path = (fs::path(trc_out) / (trc_role + ".ckpt")).string();
            save_classifier(res.model, path, CheckpointMeta{trc_seed, static_cast<uint32_t>(trc_epochs), ds.fingerprint()});
            std::cout << trc_role << ": train acc " << res.train_accuracy * 100 << "%, test acc " << res.test_accuracy * 100
                      << "% -> " << path << "\n";
            return 0;
        }
        if (trd->parsed()) {
            prepare_out_dir(trd_out, trd_force);
            ToyDataset ds = load_dataset_dir(trd_data);
            DatasetSplit split = split_dataset(ds);
            DenoiserConfig arch;
            arch.channels = ds.channels;
            arch.height = ds.height;
            arch.width = ds.width;
            arch.base_width = trd_base;
            arch.init_seed = derive_seed(trd_seed, 0xd1f);
            NoiseSchedule sched = default_schedule();
            TrainConfig tc{trd_epochs, trd_lr, trd_batch, trd_seed, trd_opt};
            DenoiserTrainResult res = train_denoiser(ds, split, sched, arch, tc);
            const std::string path = (fs::path(trd_out) / "denoiser.ckpt").string();
            save_denoiser(res.model, path, CheckpointMeta{trd_seed, static_cast<uint32_t>(trd_epochs), ds.fingerprint()});
            std::cout << "denoiser: first-epoch loss " << res.loss_per_epoch.front() << ", last-epoch loss "
                      << res.loss_per_epoch.back() << " -> " << path << "\n";
            return 0;
        }
        if (ast->parsed()) return run_campaign_command(ast_config, ast_out, ast_force, ast_ov, "st");
        if (alm->parsed()) return run_campaign_command(alm_config, alm_out, alm_force, alm_ov, "lm");
        if (ev->parsed()) {
            if (!ev_rerun.empty()) {
                prepare_out_dir(ev_out, ev_force);
                MetricsReport report = rerun_from_manifest(ev_rerun, ev_out);
                std::cout << render_summary_table({report});
                return 0;
            }
            if (ev_config.empty()) throw std::invalid_argument("evaluate: need --config or --rerun");
            return run_campaign_command(ev_config, ev_out, ev_force, ev_ov, "");
        }
        if (tr->parsed()) {
            prepare_out_dir(tr_out, tr_force);
            MetricsReport report = read_report_json((fs::path(tr_campaign) / "report.json").string());
            std::vector<Tensor> images;
            std::vector<int> labels;
            for (const auto& rec : report.records) {
                images.push_back(read_image((fs::path(tr_campaign) / rec.image_file).string()));
                labels.push_back(rec.original_label);
            }
            std::vector<Classifier> victims;
            std::vector<Classifier*> victim_ptrs;
            for (const auto& path : tr_victims) victims.push_back(load_classifier(path));
            for (auto& v : victims) victim_ptrs.push_back(&v);
            std::vector<double> asr = transfer_eval(images, labels, victim_ptrs);
            nlohmann::json doc;
            doc["campaign"] = tr_campaign;
            doc["victims"] = nlohmann::json::array();
            for (size_t i = 0; i < tr_victims.size(); ++i) {
                doc["victims"].push_back({{"path", tr_victims[i]}, {"transfer_asr", asr[i]}});
                std::cout << tr_victims[i] << ": transfer ASR " << asr[i] << "%\n";
            }
            std::ofstream os(fs::path(tr_out) / "transfer.json");
            os << doc.dump(2) << "\n";
            return 0;
        }
        if (rb->parsed()) {
            prepare_out_dir(rb_out, rb_force);
            const PerturbKind kind = perturb_kind_from_string(rb_kind);
            ToyDataset ds = load_dataset_dir(rb_data);
            DatasetSplit split = split_dataset(ds);
            Classifier target = load_classifier(rb_target);
            MetricsReport report = read_report_json((fs::path(rb_campaign) / "report.json").string());

            int clean_total = 0, clean_correct = 0;
            for (int i : split.test_indices) {
                Tensor pert = natural_perturb(ds.images[static_cast<size_t>(i)], kind, rb_strength);
                clean_correct += target.predict(pert) == ds.labels[static_cast<size_t>(i)] ? 1 : 0;
                ++clean_total;
            }
            int adv_total = 0, adv_still_wrong = 0;
            for (const auto& rec : report.records) {
                Tensor img = read_image((fs::path(rb_campaign) / rec.image_file).string());
                Tensor pert = natural_perturb(img, kind, rb_strength);
                adv_still_wrong += target.predict(pert) != rec.original_label ? 1 : 0;
                ++adv_total;
            }
            const double clean_acc = 100.0 * clean_correct / std::max(1, clean_total);
            const double adv_misclass = 100.0 * adv_still_wrong / std::max(1, adv_total);
            nlohmann::json doc;
            doc["kind"] = rb_kind;
            doc["strength"] = rb_strength;
            doc["clean_accuracy"] = clean_acc;
            doc["adversarial_misclassification"] = adv_misclass;
            std::ofstream os(fs::path(rb_out) / "robustness.json");
            os << doc.dump(2) << "\n";
            std::cout << rb_kind << " @" << rb_strength << ": clean accuracy " << clean_acc
                      << "%, adversarial misclassification " << adv_misclass << "%\n";
            return 0;
        }
        if (rp->parsed()) {
            prepare_out_dir(rp_out, rp_force);
            std::vector<MetricsReport> reports;
            for (const auto& path : rp_reports) reports.push_back(read_report_json(path));
            const std::string table = render_summary_table(reports);
            std::ofstream os(fs::path(rp_out) / "summary.txt");
            os << table;
            std::cout << table;
            if (!rp_data.empty() && !rp_campaign.empty()) {
                ToyDataset ds = load_dataset_dir(rp_data);
                for (const auto& report : reports) {
                    for (const auto& rec : report.records) {
                        const fs::path img_path = fs::path(rp_campaign) / rec.image_file;
                        if (!fs::exists(img_path)) continue;
                        Tensor adv = read_image(img_path.string());
                        Tensor orig = quantize_roundtrip(ds.images[static_cast<size_t>(rec.image_id)]);
                        Tensor diff = difference_image(orig, adv);
                        write_image(diff, (fs::path(rp_out) / (std::to_string(rec.image_id) + "_" + report.setting + "_diff.ppm")).string());
                    }
                }
            }
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
