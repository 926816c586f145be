#include "wmf/attacks.hpp"
#include "wmf/bridge.hpp"
#include "wmf/detectors.hpp"
#include "wmf/eval.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

using namespace wmf;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct LmFlags {
    std::string spec = "synth:seed=7,entropy=1.8,vocab=32000,order=3";
};

// "synth:seed=7,entropy=1.8,vocab=32000,order=3" or "bridge:<command>,vocab=N"
std::unique_ptr<LanguageModelSource> open_lm(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "synth") {
        std::uint64_t seed = 7;
        double entropy = 1.8;
        std::uint32_t vocab = 32000;
        std::uint32_t order = 3;
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) {
                throw DomainError("bad lm spec item: " + item);
            }
            std::string k = item.substr(0, eq), v = item.substr(eq + 1);
            if (k == "seed") seed = std::stoull(v);
            else if (k == "entropy") entropy = std::stod(v);
            else if (k == "vocab") vocab = static_cast<std::uint32_t>(std::stoul(v));
            else if (k == "order") order = static_cast<std::uint32_t>(std::stoul(v));
            else throw DomainError("unknown lm spec key: " + k);
        }
        return std::make_unique<SyntheticLM>(seed, vocab, order, entropy);
    }
    if (kind == "bridge") {
        auto comma = rest.rfind(",vocab=");
        if (comma == std::string::npos) {
            throw DomainError("bridge lm spec needs a trailing ,vocab=N");
        }
        std::string command = rest.substr(0, comma);
        auto vocab = static_cast<std::uint32_t>(std::stoul(rest.substr(comma + 7)));
        return std::make_unique<BridgeLM>(command, vocab);
    }
    throw DomainError("unknown lm kind: " + kind + " (expected synth: or bridge:)");
}

WatermarkKey load_key(const std::string& key_flag) {
    std::string value = key_flag;
    if (value.empty()) {
        if (const char* env = std::getenv("WMF_KEY_FILE")) {
            return WatermarkKey::from_file(env);
        }
        throw DomainError("no --key given and WMF_KEY_FILE unset");
    }
    if (value.rfind("file:", 0) == 0) {
        return WatermarkKey::from_file(value.substr(5));
    }
    return WatermarkKey::from_hex(value);
}

int cmd_generate(const std::string& lm_spec, const std::string& key_flag,
                 const std::string& watermark, std::size_t n, const GenParams& gen,
                 const KgwParams& kgw, std::uint32_t prompt_len, std::uint64_t seed,
                 const std::string& out) {
    auto lm = open_lm(lm_spec);
    WatermarkMode mode = watermark_mode_from_name(watermark);
    WatermarkKey key;
    if (mode != WatermarkMode::none) {
        key = load_key(key_flag);
    }
    auto prompts = make_prompts(seed, n, prompt_len, lm->vocab_size());
    std::vector<Sequence> seqs(n);
    parallel_for(n, 0, [&](std::size_t i) {
        GenParams gp = gen;
        SplitMix64 mix(gen.rng_seed ^ (i * 0x9E3779B97F4A7C15ULL));
        gp.rng_seed = mix.next();
        switch (mode) {
            case WatermarkMode::delta:
                seqs[i] = generate_watermarked(*lm, prompts[i], key, gp);
                break;
            case WatermarkMode::kgw: {
                KgwParams kp = kgw;
                kp.gen = gp;
                seqs[i] = generate_kgw(*lm, prompts[i], key, kp);
                break;
            }
            case WatermarkMode::none:
                seqs[i] = generate_plain(*lm, prompts[i], gp);
                break;
        }
    });
    save_dataset(seqs, out);
    double mean_len = 0;
    for (const auto& s : seqs) {
        mean_len += static_cast<double>(s.tokens.size());
    }
    mean_len /= static_cast<double>(n);
    std::cout << "wrote " << n << " sequences (watermark=" << watermark
              << ", mean length " << mean_len << ") to " << out << "\n";
    return 0;
}

int cmd_attack(const std::string& kind, double epsilon, std::uint64_t seed,
               std::uint32_t vocab, const std::string& in, const std::string& out) {
    auto seqs = load_dataset(in);
    std::vector<Sequence> attacked(seqs.size());
    parallel_for(seqs.size(), 0, [&](std::size_t i) {
        SplitMix64 mix(seed ^ (i * 0x9E3779B97F4A7C15ULL));
        AttackSpec spec{attack_kind_from_name(kind), epsilon, mix.next()};
        attacked[i] = apply_attack(seqs[i], spec, vocab).attacked;
    });
    save_dataset(attacked, out);
    std::cout << "attacked " << seqs.size() << " sequences (" << kind
              << ", epsilon=" << epsilon << ") -> " << out << "\n";
    return 0;
}

int cmd_detect(const std::string& lm_spec, const std::string& key_flag,
               const DetectorConfig& cfg, const std::string& in, const std::string& out) {
    auto lm = open_lm(lm_spec);
    WatermarkKey key = load_key(key_flag);
    auto seqs = load_dataset(in);
    std::vector<DetectionReport> reports(seqs.size());
    parallel_for(seqs.size(), 0, [&](std::size_t i) {
        reports[i] = detect(*lm, key, seqs[i], cfg);
    });
    std::ofstream os(out);
    if (!os) {
        throw DomainError("cannot open output file: " + out);
    }
    std::size_t wm = 0, mod = 0;
    for (const auto& r : reports) {
        os << r.to_json() << '\n';
        wm += r.verdict_watermark;
        mod += r.verdict_modified;
    }
    std::cout << "detected " << seqs.size() << " sequences: "
              << 100.0 * static_cast<double>(wm) / static_cast<double>(seqs.size())
              << "% watermarked, "
              << 100.0 * static_cast<double>(mod) / static_cast<double>(seqs.size())
              << "% modified -> " << out << "\n";
    return 0;
}

std::vector<double> load_scores(const std::string& path, const std::string& field) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open score file: " + path);
    }
    std::vector<double> scores;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        json j = json::parse(line);
        scores.push_back(j.at(field).get<double>());
    }
    return scores;
}

int cmd_calibrate(const std::string& pos_path, const std::string& neg_path,
                  const std::string& field, double target_fpr, const std::string& out) {
    auto positives = load_scores(pos_path, field);
    auto negatives = load_scores(neg_path, field);
    Calibration cal = calibrate_threshold(positives, negatives, target_fpr);
    if (!cal.separated && cal.achieved_fpr > target_fpr) {
        std::cerr << "warning: score classes overlap heavily; threshold set at the "
                     "target-FPR quantile\n";
    }
    json j{{"threshold", cal.threshold},
           {"achieved_fpr", cal.achieved_fpr},
           {"achieved_tpr", cal.achieved_tpr},
           {"separated", cal.separated}};
    json roc = json::array();
    for (const auto& p : cal.roc) {
        roc.push_back({{"threshold", p.threshold}, {"tpr", p.tpr}, {"fpr", p.fpr}});
    }
    j["roc"] = roc;
    std::ofstream os(out);
    os << j.dump(2) << '\n';
    std::cout << "threshold " << cal.threshold << " (tpr " << cal.achieved_tpr << ", fpr "
              << cal.achieved_fpr << ") -> " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw DomainError("cannot open config file: " + config_path);
        }
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        cfg = ExperimentConfig::from_json(text);
    }
    if (cfg.key.bytes.empty()) {
        cfg.key = WatermarkKey::random(404);
    }
    if (!out_dir.empty()) {
        cfg.out_dir = out_dir;
    }
    ExperimentResult result = run_experiment(cfg);
    write_reports(result, cfg);
    std::cout << "experiment " << result.config_hash << " -> " << cfg.out_dir << "/\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delta-reweight watermark forensics"};
    app.require_subcommand(1);
    app.set_config("--config");

    std::string lm_spec = "synth:seed=7,entropy=1.8,vocab=32000,order=3";
    std::string key_flag;
    GenParams gen;
    KgwParams kgw;
    DetectorConfig det;

    auto add_lm = [&](CLI::App* cmd) { cmd->add_option("--lm", lm_spec, "LM source spec"); };
    auto add_key = [&](CLI::App* cmd) {
        cmd->add_option("--key", key_flag, "hex key or file:<path> (default $WMF_KEY_FILE)");
    };
    auto add_gen = [&](CLI::App* cmd) {
        cmd->add_option("--n-ct", gen.n_ct);
        cmd->add_option("--top-k", gen.top_k);
        cmd->add_option("--top-p", gen.top_p);
        cmd->add_option("--max-len", gen.max_len);
        cmd->add_option("--seed", gen.rng_seed);
    };

    auto* g = app.add_subcommand("generate", "generate a dataset");
    std::string watermark = "delta";
    std::size_t n = 100;
    std::uint32_t prompt_len = 8;
    std::string out = "out.jsonl";
    add_lm(g);
    add_key(g);
    add_gen(g);
    g->add_option("--watermark", watermark, "delta|kgw|none");
    g->add_option("--n", n);
    g->add_option("--prompt-len", prompt_len);
    g->add_option("--gamma", kgw.gamma);
    g->add_option("--delta-logit", kgw.delta_logit);
    g->add_option("--out", out)->required();

    auto* a = app.add_subcommand("attack", "perturb a dataset");
    std::string kind = "replacement";
    double epsilon = 0.1;
    std::uint64_t attack_seed = 0;
    std::uint32_t vocab = 32000;
    std::string in_path;
    a->add_option("--kind", kind, "addition|deletion|replacement");
    a->add_option("--epsilon", epsilon);
    a->add_option("--seed", attack_seed);
    a->add_option("--vocab", vocab);
    a->add_option("in", in_path)->required();
    a->add_option("out", out)->required();

    auto* d = app.add_subcommand("detect", "run dual detection over a dataset");
    add_lm(d);
    add_key(d);
    d->add_option("--mt", det.modification_threshold);
    d->add_option("--threshold", det.wm_threshold);
    d->add_option("--grid-size", det.grid_size);
    d->add_option("--z-lo", det.z_lo);
    d->add_option("--z-hi", det.z_hi);
    d->add_option("in", in_path)->required();
    d->add_option("--out", out)->required();

    auto* c = app.add_subcommand("calibrate", "pick a score threshold at a target FPR");
    std::string pos_path, neg_path, field = "drllr_avg";
    double target_fpr = 0.01;
    c->add_option("positives", pos_path)->required();
    c->add_option("negatives", neg_path)->required();
    c->add_option("--field", field);
    c->add_option("--target-fpr", target_fpr);
    c->add_option("--out", out)->required();

    auto* e = app.add_subcommand("evaluate", "run the full experiment grid");
    std::string exp_config, out_dir;
    e->add_option("--experiment", exp_config, "experiment config JSON");
    e->add_option("--out", out_dir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (g->parsed()) {
            if (watermark != "none" && key_flag.empty() && !std::getenv("WMF_KEY_FILE")) {
                std::cerr << "error: --watermark " << watermark << " requires --key\n";
                return kExitUsage;
            }
            return cmd_generate(lm_spec, key_flag, watermark, n, gen, kgw, prompt_len,
                                gen.rng_seed, out);
        }
        if (a->parsed()) {
            return cmd_attack(kind, epsilon, attack_seed, vocab, in_path, out);
        }
        if (d->parsed()) {
            return cmd_detect(lm_spec, key_flag, det, in_path, out);
        }
        if (c->parsed()) {
            return cmd_calibrate(pos_path, neg_path, field, target_fpr, out);
        }
        if (e->parsed()) {
            return cmd_evaluate(exp_config, out_dir);
        }
    } catch (const wmf::DomainError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitData;
    } catch (const wmf::BridgeError& ex) {
        std::cerr << "bridge error: " << ex.what() << "\n";
        return kExitData;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
