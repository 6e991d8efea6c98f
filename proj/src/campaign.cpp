#include "semadv/campaign.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <sys/utsname.h>
#include <thread>

#include "json.hpp"
#include "semadv/attack_lm.hpp"
#include "semadv/attack_st.hpp"
#include "semadv/image_io.hpp"
#include "semadv/losses.hpp"
#include "semadv/rng.hpp"

namespace semadv {

using nlohmann::json;
namespace fs = std::filesystem;

const char* kToolVersion = "semadv 0.1.0";

NoiseSchedule default_schedule() { return build_schedule<float>(1000, 1e-4f, 0.02f, ScheduleMode::ddim); }

namespace {

json hardware_info() {
    json hw;
    utsname uts{};
    if (uname(&uts) == 0) {
        hw["system"] = std::string(uts.sysname) + " " + uts.release;
        hw["machine"] = uts.machine;
    }
    hw["hardware_threads"] = std::thread::hardware_concurrency();
#if defined(__GNUC__) && !defined(__clang__)
    hw["compiler"] = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#elif defined(__clang__)
    hw["compiler"] = "clang " + std::to_string(__clang_major__) + "." + std::to_string(__clang_minor__);
#endif
    return hw;
}

uint64_t file_fingerprint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("fingerprint: cannot open '" + path + "'");
    std::vector<char> buf(1 << 16);
    uint64_t h = 1469598103934665603ull;
    while (is) {
        is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a(buf.data(), static_cast<size_t>(is.gcount()), h);
    }
    return h;
}

void freeze_params(Classifier& c) {
    for (auto& p : c.params().entries()) p.second.set_requires_grad(false);
}

struct SidecarInfo {
    std::string kind;
    json arch;
};

void write_sidecar(const std::string& ckpt_path, const std::string& kind, const json& arch) {
    json doc;
    doc["kind"] = kind;
    doc["arch"] = arch;
    doc["tool_version"] = kToolVersion;
    std::ofstream os(ckpt_path + ".json");
    if (!os) throw std::runtime_error("sidecar: cannot write '" + ckpt_path + ".json'");
    os << doc.dump(2) << "\n";
}

SidecarInfo read_sidecar(const std::string& ckpt_path) {
    std::ifstream is(ckpt_path + ".json");
    if (!is) throw std::runtime_error("sidecar: missing '" + ckpt_path + ".json'");
    json doc = json::parse(is);
    return SidecarInfo{doc.at("kind").get<std::string>(), doc.at("arch")};
}

}  // namespace

void save_classifier(const Classifier& model, const std::string& path, const CheckpointMeta& meta) {
    save_checkpoint(model, path, meta);
    const auto& c = model.config();
    write_sidecar(path, "classifier",
                  json{{"in_channels", c.in_channels},
                       {"height", c.height},
                       {"width", c.width},
                       {"num_classes", c.num_classes},
                       {"widths", c.widths},
                       {"init_seed", c.init_seed}});
}

Classifier load_classifier(const std::string& path) {
    SidecarInfo info = read_sidecar(path);
    if (info.kind != "classifier") throw std::runtime_error("load_classifier: '" + path + "' is a " + info.kind + " checkpoint");
    ClassifierConfig cfg;
    cfg.in_channels = info.arch.at("in_channels").get<int>();
    cfg.height = info.arch.at("height").get<int>();
    cfg.width = info.arch.at("width").get<int>();
    cfg.num_classes = info.arch.at("num_classes").get<int>();
    cfg.widths = info.arch.at("widths").get<std::vector<int>>();
    cfg.init_seed = info.arch.at("init_seed").get<uint64_t>();
    Classifier model(cfg);
    load_checkpoint(model, path);
    return model;
}

void save_denoiser(const Denoiser& model, const std::string& path, const CheckpointMeta& meta) {
    save_checkpoint(model, path, meta);
    const auto& c = model.config();
    write_sidecar(path, "denoiser",
                  json{{"channels", c.channels},
                       {"height", c.height},
                       {"width", c.width},
                       {"base_width", c.base_width},
                       {"emb_dim", c.emb_dim},
                       {"init_seed", c.init_seed}});
}

Denoiser load_denoiser(const std::string& path) {
    SidecarInfo info = read_sidecar(path);
    if (info.kind != "denoiser") throw std::runtime_error("load_denoiser: '" + path + "' is a " + info.kind + " checkpoint");
    DenoiserConfig cfg;
    cfg.channels = info.arch.at("channels").get<int>();
    cfg.height = info.arch.at("height").get<int>();
    cfg.width = info.arch.at("width").get<int>();
    cfg.base_width = info.arch.at("base_width").get<int>();
    cfg.emb_dim = info.arch.at("emb_dim").get<int>();
    cfg.init_seed = info.arch.at("init_seed").get<uint64_t>();
    Denoiser model(cfg);
    load_checkpoint(model, path);
    return model;
}

void write_dataset_dir(const ToyDataset& ds, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    json doc;
    doc["seed"] = ds.seed;
    doc["num_classes"] = ds.num_classes;
    doc["count"] = ds.images.size();
    doc["channels"] = ds.channels;
    doc["height"] = ds.height;
    doc["width"] = ds.width;
    doc["fingerprint"] = ds.fingerprint();
    doc["labels"] = ds.labels;
    doc["tool_version"] = kToolVersion;
    std::ofstream os(fs::path(dir) / "dataset.json");
    if (!os) throw std::runtime_error("write_dataset_dir: cannot write '" + dir + "/dataset.json'");
    os << doc.dump(2) << "\n";
    for (size_t i = 0; i < ds.images.size(); ++i) {
        std::ostringstream name;
        name << "img_" << std::setw(4) << std::setfill('0') << i << ".ppm";
        write_image(ds.images[i], (fs::path(dir) / "images" / name.str()).string());
    }
}

ToyDataset load_dataset_dir(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "dataset.json");
    if (!is) throw std::runtime_error("load_dataset_dir: missing '" + dir + "/dataset.json'");
    json doc = json::parse(is);
    ToyDataset ds = gen_toy_dataset(doc.at("seed").get<uint64_t>(), doc.at("num_classes").get<int>(),
                                    doc.at("count").get<int>(), doc.at("height").get<int>(), doc.at("width").get<int>(),
                                    doc.at("channels").get<int>());
    const uint64_t expect = doc.at("fingerprint").get<uint64_t>();
    if (ds.fingerprint() != expect)
        throw std::runtime_error("load_dataset_dir: dataset fingerprint mismatch; generator drift or corrupt metadata");
    return ds;
}

std::vector<int> select_attack_pool(const ToyDataset& ds, const DatasetSplit& split, Classifier& target, int count) {
    std::vector<int> pool;
    for (int i : split.test_indices) {
        if (target.predict(ds.images[static_cast<size_t>(i)]) == ds.labels[static_cast<size_t>(i)]) pool.push_back(i);
        if (static_cast<int>(pool.size()) == count) break;
    }
    if (static_cast<int>(pool.size()) < count)
        throw std::runtime_error("attack pool: only " + std::to_string(pool.size()) + " correctly classified test images, need " +
                                 std::to_string(count));
    return pool;
}

std::vector<std::pair<int, int>> select_lm_pairs(const ToyDataset& ds, const DatasetSplit& split, Classifier& target,
                                                 int count, uint64_t seed) {
    std::vector<int> correct;
    for (int i : split.test_indices)
        if (target.predict(ds.images[static_cast<size_t>(i)]) == ds.labels[static_cast<size_t>(i)]) correct.push_back(i);

    Rng rng(derive_seed(seed, 0xbeefULL));
    std::vector<std::pair<int, int>> pairs;
    for (int s : correct) {
        if (static_cast<int>(pairs.size()) == count) break;
        std::vector<int> candidates;
        for (int t : correct)
            if (ds.labels[static_cast<size_t>(t)] != ds.labels[static_cast<size_t>(s)]) candidates.push_back(t);
        if (candidates.empty()) continue;
        pairs.emplace_back(s, candidates[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(candidates.size()) - 1))]);
    }
    if (static_cast<int>(pairs.size()) < count)
        throw std::runtime_error("lm pairs: only " + std::to_string(pairs.size()) + " valid pairs, need " + std::to_string(count));
    return pairs;
}

namespace {

json record_to_json(const PerImageRecord& r) {
    json j;
    j["image_id"] = r.image_id;
    if (r.pair_target_id >= 0) j["pair_target_id"] = r.pair_target_id;
    j["success"] = r.success;
    j["original_label"] = r.original_label;
    j["adversarial_label"] = r.adversarial_label;
    j["iterations"] = r.iterations;
    j["judge_queries"] = r.judge_queries;
    j["target_queries"] = r.target_queries;
    j["wall_time_s"] = r.wall_time_s;
    if (!r.delta_trace.empty()) {
        j["final_delta"] = r.final_delta;
        j["delta_trace"] = r.delta_trace;
    }
    if (!r.loss_trace.empty()) j["loss_trace"] = r.loss_trace;
    j["image_file"] = r.image_file;
    return j;
}

PerImageRecord record_from_json(const json& j) {
    PerImageRecord r;
    r.image_id = j.at("image_id").get<int>();
    r.pair_target_id = j.contains("pair_target_id") ? j.at("pair_target_id").get<int>() : -1;
    r.success = j.at("success").get<bool>();
    r.original_label = j.at("original_label").get<int>();
    r.adversarial_label = j.at("adversarial_label").get<int>();
    r.iterations = j.at("iterations").get<int>();
    r.judge_queries = j.at("judge_queries").get<int>();
    r.target_queries = j.at("target_queries").get<int>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    if (j.contains("final_delta")) r.final_delta = j.at("final_delta").get<double>();
    if (j.contains("delta_trace")) r.delta_trace = j.at("delta_trace").get<std::vector<double>>();
    if (j.contains("loss_trace")) r.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    r.image_file = j.at("image_file").get<std::string>();
    return r;
}

void aggregate(MetricsReport& report) {
    const double n = static_cast<double>(report.records.size());
    int succ = 0;
    double q = 0, tq = 0, it = 0, tm = 0, fd = 0;
    int lm_records = 0;
    for (const auto& r : report.records) {
        succ += r.success ? 1 : 0;
        q += r.judge_queries;
        tq += r.target_queries;
        it += r.iterations;
        tm += r.wall_time_s;
        if (!r.delta_trace.empty()) {
            fd += r.final_delta;
            ++lm_records;
        }
    }
    report.asr = 100.0 * succ / n;
    report.avg_queries = q / n;
    report.avg_target_queries = tq / n;
    report.avg_iterations = it / n;
    report.avg_time_s = tm / n;
    report.avg_final_delta = lm_records > 0 ? fd / lm_records : 0.0;
}

std::vector<double> to_feature(Classifier& extractor, const Tensor& img) {
    std::vector<float> f = feature_embed(extractor, img);
    return std::vector<double>(f.begin(), f.end());
}

}  // namespace

MetricsReport run_campaign(const CampaignConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    if (fs::exists(fs::path(out_dir) / "manifest.json"))
        throw std::runtime_error("run_campaign: output directory '" + out_dir + "' already holds a campaign (use --force)");
    fs::create_directories(out_dir);

    ToyDataset ds = load_dataset_dir(cfg.dataset_dir);
    DatasetSplit split = split_dataset(ds);
    Classifier target = load_classifier(cfg.target_path);
    Classifier extractor = load_classifier(cfg.extractor_path);
    Denoiser denoiser = load_denoiser(cfg.denoiser_path);
    freeze_params(target);
    freeze_params(extractor);
    std::optional<Classifier> surrogate;
    if (!cfg.surrogate_path.empty()) {
        surrogate = load_classifier(cfg.surrogate_path);
        freeze_params(*surrogate);
    }
    NoiseSchedule sched = default_schedule();

    MetricsReport report;
    report.setting = cfg.setting_label();
    report.config_json = serialize_config(cfg);

    const bool is_st = cfg.attack == "st";
    std::vector<int> pool;
    std::vector<std::pair<int, int>> pairs;
    if (is_st) {
        pool = select_attack_pool(ds, split, target, cfg.count);
    } else {
        pairs = select_lm_pairs(ds, split, target, cfg.count, cfg.seed);
        for (const auto& p : pairs) pool.push_back(p.first);
    }

    report.records.resize(pool.size());
    std::vector<Tensor> adv_images(pool.size());
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;

    auto worker = [&]() {
        // thread-private read-only model copies; grads stay frozen
        Classifier target_c = target.clone();
        Classifier extractor_c = extractor.clone();
        freeze_params(target_c);
        freeze_params(extractor_c);
        std::optional<Classifier> surrogate_c;
        if (surrogate) {
            surrogate_c = surrogate->clone();
            freeze_params(*surrogate_c);
        }
        while (true) {
            const size_t k = next.fetch_add(1);
            if (k >= pool.size()) break;
            try {
                const int img_id = pool[k];
                AttackResult res;
                if (is_st) {
                    STConfig att = cfg.st;
                    att.seed = derive_seed(cfg.seed, static_cast<uint64_t>(img_id));
                    res = st_attack(ds.images[static_cast<size_t>(img_id)], target_c, surrogate_c ? *surrogate_c : target_c,
                                    extractor_c, denoiser, sched, att);
                } else {
                    LMConfig att = cfg.lm;
                    att.seed = derive_seed(cfg.seed, static_cast<uint64_t>(img_id));
                    res = lm_attack(ds.images[static_cast<size_t>(img_id)], ds.images[static_cast<size_t>(pairs[k].second)],
                                    target_c, denoiser, sched, att);
                }
                // evaluate on the 8-bit representation that lands on disk
                Tensor stored = quantize_roundtrip(res.adversarial);
                const int label = target_c.predict(stored);
                PerImageRecord rec;
                rec.image_id = img_id;
                rec.pair_target_id = is_st ? -1 : pairs[k].second;
                rec.original_label = res.original_label;
                rec.adversarial_label = label;
                rec.success = label != res.original_label;
                rec.iterations = res.iterations;
                rec.judge_queries = res.judge_queries;
                rec.target_queries = res.target_queries + 1;
                rec.wall_time_s = res.wall_time_s;
                rec.loss_trace = res.loss_trace;
                rec.delta_trace = res.delta_trace;
                rec.final_delta = res.delta_trace.empty() ? 0.0 : res.delta_trace.back();
                report.records[k] = rec;
                adv_images[k] = stored;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    auto write_partial_manifest = [&](const std::string& error) {
        json manifest;
        manifest["tool_version"] = kToolVersion;
        manifest["status"] = "aborted";
        manifest["error"] = error;
        manifest["config"] = json::parse(report.config_json);
        json recs = json::array();
        for (const auto& r : report.records)
            if (r.image_id >= 0) recs.push_back(record_to_json(r));
        manifest["partial_records"] = recs;
        std::ofstream os(fs::path(out_dir) / "manifest.json");
        os << manifest.dump(2) << "\n";
    };
    if (!first_error.empty()) {
        write_partial_manifest(first_error);
        throw std::runtime_error("run_campaign: attack failed: " + first_error);
    }

    // persist adversarial images and finalize records
    for (size_t k = 0; k < pool.size(); ++k) {
        std::ostringstream name;
        name << report.records[k].image_id << "_" << report.setting << ".ppm";
        const std::string file = name.str();
        write_image(adv_images[k], (fs::path(out_dir) / file).string());
        report.records[k].image_file = file;
    }

    // distribution metrics over the stored representations
    std::vector<std::vector<double>> adv_feats, clean_a, clean_b, clean_all;
    for (size_t k = 0; k < adv_images.size(); ++k) adv_feats.push_back(to_feature(extractor, adv_images[k]));
    {
        int parity = 0;
        for (int i : split.test_indices) {
            Tensor img = quantize_roundtrip(ds.images[static_cast<size_t>(i)]);
            std::vector<double> f = to_feature(extractor, img);
            clean_all.push_back(f);
            (parity++ % 2 == 0 ? clean_a : clean_b).push_back(std::move(f));
        }
    }
    const FeatureSet fs_adv = FeatureSet::build(adv_feats);
    const FeatureSet fs_ref = FeatureSet::build(clean_all);
    report.fid_local = compute_fid(fs_adv, fs_ref);
    report.clean_fid_floor = compute_fid(FeatureSet::build(clean_a), FeatureSet::build(clean_b));
    const int kid_m = std::min({cfg.kid_subset_size, static_cast<int>(adv_feats.size()), static_cast<int>(clean_all.size())});
    report.kid_local = compute_kid(fs_adv, fs_ref, kid_m, cfg.kid_subsets, cfg.seed);
    const int kid_floor_m = std::min({cfg.kid_subset_size, static_cast<int>(clean_a.size()), static_cast<int>(clean_b.size())});
    report.clean_kid_floor = compute_kid(FeatureSet::build(clean_a), FeatureSet::build(clean_b), kid_floor_m, cfg.kid_subsets, cfg.seed);
    aggregate(report);

    write_report_json(report, (fs::path(out_dir) / "report.json").string());
    {
        std::ofstream os(fs::path(out_dir) / "summary.txt");
        os << render_summary_table({report});
    }

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["status"] = "complete";
    manifest["seed"] = cfg.seed;
    manifest["seed_defaulted"] = cfg.seed_defaulted;
    manifest["config"] = json::parse(report.config_json);
    manifest["dataset_fingerprint"] = ds.fingerprint();
    manifest["checkpoints"] = json::object();
    manifest["checkpoints"]["target"] = {{"path", cfg.target_path}, {"fingerprint", file_fingerprint(cfg.target_path)}};
    manifest["checkpoints"]["extractor"] = {{"path", cfg.extractor_path}, {"fingerprint", file_fingerprint(cfg.extractor_path)}};
    manifest["checkpoints"]["denoiser"] = {{"path", cfg.denoiser_path}, {"fingerprint", file_fingerprint(cfg.denoiser_path)}};
    if (!cfg.surrogate_path.empty())
        manifest["checkpoints"]["surrogate"] = {{"path", cfg.surrogate_path}, {"fingerprint", file_fingerprint(cfg.surrogate_path)}};
    json outputs = json::array();
    outputs.push_back("report.json");
    outputs.push_back("summary.txt");
    for (const auto& r : report.records) outputs.push_back(r.image_file);
    manifest["outputs"] = outputs;
    manifest["hardware"] = hardware_info();
    std::ofstream os(fs::path(out_dir) / "manifest.json");
    os << manifest.dump(2) << "\n";

    return report;
}

MetricsReport rerun_from_manifest(const std::string& manifest_path, const std::string& out_dir) {
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("rerun: cannot open '" + manifest_path + "'");
    json manifest = json::parse(is);
    if (manifest.value("status", "") != "complete")
        throw std::runtime_error("rerun: manifest does not describe a complete campaign");
    CampaignConfig cfg = parse_config_text(manifest.at("config").dump());

    for (auto it = manifest.at("checkpoints").begin(); it != manifest.at("checkpoints").end(); ++it) {
        const std::string path = it.value().at("path").get<std::string>();
        const uint64_t expect = it.value().at("fingerprint").get<uint64_t>();
        if (file_fingerprint(path) != expect)
            throw std::runtime_error("rerun: checkpoint '" + path + "' differs from the one recorded in the manifest");
    }
    ToyDataset ds = load_dataset_dir(cfg.dataset_dir);
    if (ds.fingerprint() != manifest.at("dataset_fingerprint").get<uint64_t>())
        throw std::runtime_error("rerun: dataset fingerprint differs from the manifest");

    return run_campaign(cfg, out_dir);
}

void write_report_json(const MetricsReport& report, const std::string& path) {
    json doc;
    doc["setting"] = report.setting;
    doc["config"] = json::parse(report.config_json);
    doc["aggregates"] = {{"asr", report.asr},
                         {"fid_local", report.fid_local},
                         {"kid_local", report.kid_local},
                         {"clean_fid_floor", report.clean_fid_floor},
                         {"clean_kid_floor", report.clean_kid_floor},
                         {"avg_queries", report.avg_queries},
                         {"avg_target_queries", report.avg_target_queries},
                         {"avg_iterations", report.avg_iterations},
                         {"avg_time_s", report.avg_time_s},
                         {"avg_final_delta", report.avg_final_delta}};
    json recs = json::array();
    for (const auto& r : report.records) recs.push_back(record_to_json(r));
    doc["per_image"] = recs;
    doc["hardware"] = hardware_info();
    doc["tool_version"] = kToolVersion;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_report_json: cannot write '" + path + "'");
    os << doc.dump(2) << "\n";
}

MetricsReport read_report_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_report_json: cannot open '" + path + "'");
    json doc = json::parse(is);
    MetricsReport report;
    report.setting = doc.at("setting").get<std::string>();
    report.config_json = doc.at("config").dump();
    const json& ag = doc.at("aggregates");
    report.asr = ag.at("asr").get<double>();
    report.fid_local = ag.at("fid_local").get<double>();
    report.kid_local = ag.at("kid_local").get<double>();
    report.clean_fid_floor = ag.at("clean_fid_floor").get<double>();
    report.clean_kid_floor = ag.at("clean_kid_floor").get<double>();
    report.avg_queries = ag.at("avg_queries").get<double>();
    report.avg_target_queries = ag.at("avg_target_queries").get<double>();
    report.avg_iterations = ag.at("avg_iterations").get<double>();
    report.avg_time_s = ag.at("avg_time_s").get<double>();
    report.avg_final_delta = ag.at("avg_final_delta").get<double>();
    for (const auto& rj : doc.at("per_image")) report.records.push_back(record_from_json(rj));
    return report;
}

std::string render_summary_table(const std::vector<MetricsReport>& reports) {
    std::ostringstream os;
    os << std::left << std::setw(26) << "setting" << std::right << std::setw(9) << "ASR(%)" << std::setw(12)
       << "FID-local" << std::setw(12) << "KID-local" << std::setw(12) << "avg query" << std::setw(12) << "avg iter"
       << std::setw(12) << "avg t(s)" << "\n";
    os << std::string(95, '-') << "\n";
    for (const auto& r : reports) {
        os << std::left << std::setw(26) << r.setting << std::right << std::fixed << std::setprecision(1) << std::setw(9)
           << r.asr << std::setprecision(3) << std::setw(12) << r.fid_local << std::setw(12) << r.kid_local
           << std::setprecision(2) << std::setw(12) << r.avg_queries << std::setw(12) << r.avg_iterations << std::setw(12)
           << r.avg_time_s << "\n";
    }
    if (!reports.empty()) {
        os << std::left << std::setw(26) << "clean floor" << std::right << std::setw(9) << "-" << std::fixed
           << std::setprecision(3) << std::setw(12) << reports.front().clean_fid_floor << std::setw(12)
           << reports.front().clean_kid_floor << std::setw(12) << "-" << std::setw(12) << "-" << std::setw(12) << "-"
           << "\n";
    }
    return os.str();
}

Tensor difference_image(const Tensor& original, const Tensor& adversarial) {
    if (!same_shape(original.shape(), adversarial.shape()))
        throw std::invalid_argument("difference_image: shape mismatch");
    Tensor diff = Tensor::zeros(original.shape());
    float mx = 0.0f;
    for (size_t i = 0; i < diff.values().size(); ++i) {
        diff.values()[i] = std::abs(original.values()[i] - adversarial.values()[i]);
        mx = std::max(mx, diff.values()[i]);
    }
    // map [0, max] onto the full [-1, 1] image range
    for (auto& v : diff.values()) v = mx > 0 ? v / mx * 2.0f - 1.0f : -1.0f;
    return diff;
}

}  // namespace semadv
