#include "f2f/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "f2f/error.hpp"
#include "f2f/flow.hpp"
#include "f2f/image_io.hpp"
#include "f2f/metrics.hpp"
#include "f2f/model.hpp"
#include "f2f/noise.hpp"
#include "f2f/parallel.hpp"
#include "f2f/synthetic.hpp"
#include "f2f/trainer.hpp"
#include "f2f/warp.hpp"

namespace f2f {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t seed_from_env() {
  const char* env = std::getenv("F2F_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw Error(ErrorCode::kInvalidArgument, std::string("F2F_SEED is not an integer: ") + env);
  return v;
}

// Manifest path for an output: next to a file, or inside a pattern's directory.
fs::path manifest_path_for(const std::string& output, const std::string& command) {
  if (output.find('%') != std::string::npos) {
    const fs::path dir = fs::path(output).parent_path();
    return dir / (command + ".manifest.json");
  }
  return fs::path(output + ".manifest.json");
}

void ensure_parent(const fs::path& path) {
  const fs::path dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
}

void ensure_pattern_dir(const std::string& pattern) { ensure_parent(fs::path(pattern)); }

struct NoiseFlags {
  std::string noise = "awgn";
  std::optional<double> sigma, p, radius, to_sigma, to_p, to_radius;
  std::optional<int> quality, to_quality, at, t_start, t_end;
  std::string kind, to_kind, config_file;

  void add(CLI::App* app) {
    app->add_option("--noise", noise, "Noise kind, or 'ramp' / 'switch' for a schedule")->capture_default_str();
    app->add_option("--kind", kind, "First noise kind of a ramp/switch schedule");
    app->add_option("--sigma", sigma, "Noise std in 8-bit units");
    app->add_option("--p", p, "Salt-and-pepper replacement probability");
    app->add_option("--radius", radius, "Correlated-noise disk radius");
    app->add_option("--quality", quality, "JPEG quality (1-100)");
    app->add_option("--to-kind", to_kind, "Noise kind after the switch / at the ramp end");
    app->add_option("--to-sigma", to_sigma);
    app->add_option("--to-p", to_p);
    app->add_option("--to-radius", to_radius);
    app->add_option("--to-quality", to_quality);
    app->add_option("--at", at, "1-based frame where a switch schedule changes");
    app->add_option("--t-start", t_start);
    app->add_option("--t-end", t_end);
    app->add_option("--noise-config", config_file, "key=value schedule file (overrides the flags above)");
  }

  NoiseSchedule schedule() const {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw Error(ErrorCode::kIo, "cannot open noise config " + config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      return parse_noise_config(ss.str());
    }
    std::ostringstream text;
    auto put = [&](const char* key, const auto& v) {
      if (v) text << key << '=' << *v << ' ';
    };
    if (noise == "ramp" || noise == "switch") {
      text << "mode=" << noise << ' ' << "kind=" << (kind.empty() ? "awgn" : kind) << ' ';
      if (!to_kind.empty()) text << "to_kind=" << to_kind << ' ';
    } else {
      parse_noise_kind(noise);
      if (!kind.empty() || !to_kind.empty() || at || t_start || t_end) {
        throw Error(ErrorCode::kInvalidArgument, "--kind/--to-kind/--at/--t-start/--t-end need --noise ramp|switch");
      }
      text << "mode=constant kind=" << noise << ' ';
    }
    put("sigma", sigma);
    put("p", p);
    put("radius", radius);
    put("quality", quality);
    put("to_sigma", to_sigma);
    put("to_p", to_p);
    put("to_radius", to_radius);
    put("to_quality", to_quality);
    put("at", at);
    put("t_start", t_start);
    put("t_end", t_end);
    return parse_noise_config(text.str());
  }
};

struct FlowFlags {
  FlowConfig flow;
  OcclusionConfig occlusion;

  void add(CLI::App* app) {
    app->add_option("--lambda", flow.lambda_data, "TV-L1 data weight")->capture_default_str();
    app->add_option("--theta", flow.theta_tv)->capture_default_str();
    app->add_option("--tau", flow.tau_pd)->capture_default_str();
    app->add_option("--pyramid-scale", flow.pyramid_scale)->capture_default_str();
    app->add_option("--scales", flow.n_scales, "Pyramid levels (0 = automatic)")->capture_default_str();
    app->add_option("--warps", flow.n_warps)->capture_default_str();
    app->add_option("--flow-iters", flow.n_iters)->capture_default_str();
    app->add_option("--prefilter", flow.prefilter_downscale, "Box downscale factor before the flow")
        ->capture_default_str();
    app->add_option("--tau-div", occlusion.tau_div, "Divergence threshold of the occlusion mask")
        ->capture_default_str();
    app->add_option("--dilation", occlusion.dilation_radius)->capture_default_str();
  }
};

FrameSequence load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "corpus directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  FrameSequence out;
  for (const auto& f : files) {
    const ColorImage im = read_pnm(f);
    Frame gray(im.rows, im.cols);
    for (std::size_t i = 0; i < gray.size(); ++i) {
      double s = 0.0;
      for (int c = 0; c < im.channels; ++c) s += im.px[i * im.channels + c];
      gray[i] = static_cast<float>(s / im.channels);
    }
    out.push_back(std::move(gray));
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyCorpus, "no .pgm/.ppm images in " + dir.string());
  return out;
}

class Runner {
 public:
  explicit Runner(std::vector<std::string> args) : args_(std::move(args)) {}

  int run() {
    CLI::App app{"Model-blind video denoising by frame-to-frame fine-tuning", "f2f"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);
    app.add_option("--threads", threads_, "Worker threads (default: all cores)");
    app.add_option("--seed", seed_, "Master seed (default: $F2F_SEED, else 0)");
    app.add_option("--manifest", manifest_, "Manifest path (default: next to the main output)");

    add_corrupt(app);
    add_pretrain(app);
    add_finetune(app);
    add_denoise(app);
    add_flow(app);
    add_eval(app);
    add_synth(app);
    add_replay(app);

    try {
      std::vector<std::string> reversed(args_.rbegin(), args_.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return static_cast<int>(ExitStatus::kUsage);
    }

    try {
      if (threads_) {
        if (*threads_ < 1) throw Error(ErrorCode::kInvalidArgument, "--threads must be >= 1");
        set_thread_count(*threads_);
      }
      if (!seed_) seed_ = seed_from_env();
      action_();
      return static_cast<int>(ExitStatus::kOk);
    } catch (const Error& e) {
      std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
      return static_cast<int>(exit_status_for(e.code()));
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error [io]: " << e.what() << '\n';
      return static_cast<int>(ExitStatus::kData);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return static_cast<int>(ExitStatus::kData);
    }
  }

 private:
  std::vector<std::string> args_;
  std::optional<int> threads_;
  std::optional<std::uint64_t> seed_;
  std::string manifest_;
  CLI::App* active_ = nullptr;
  std::function<void()> action_;

  // Records everything needed to rerun the command: the original arguments
  // with the resolved seed appended, and every resolved flag.
  void write_manifest(const std::string& primary_output, const json& inputs, const json& outputs,
                      json extra = json::object()) {
    const fs::path path = manifest_.empty() ? manifest_path_for(primary_output, active_->get_name()) : fs::path(manifest_);
    ensure_parent(path);
    json flags = json::object();
    for (const CLI::Option* opt : active_->get_options()) {
      if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
      const auto& results = opt->results();
      if (results.empty()) {
        const std::string def = opt->get_default_str();
        flags[opt->get_name()] = def.empty() ? json(nullptr) : json(def);
      } else if (opt->get_expected_max() == 0) {
        flags[opt->get_name()] = true;
      } else {
        flags[opt->get_name()] = results.size() == 1 ? json(results.front()) : json(results);
      }
    }
    std::vector<std::string> replay_args = args_;
    const bool has_seed = std::find(args_.begin(), args_.end(), "--seed") != args_.end();
    if (!has_seed) {
      replay_args.push_back("--seed");
      replay_args.push_back(std::to_string(*seed_));
    }
    json m;
    m["command"] = active_->get_name();
    m["tool_version"] = kToolVersion;
    m["seed"] = *seed_;
    m["threads"] = thread_count();
    m["args"] = replay_args;
    m["flags"] = flags;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    for (auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + path.string());
    out << m.dump(2) << '\n';
  }

  void bind(CLI::App* sub, std::function<void()> fn) {
    sub->callback([this, sub, fn = std::move(fn)] {
      active_ = sub;
      action_ = fn;
    });
  }

  void add_corrupt(CLI::App& app) {
    auto* sub = app.add_subcommand("corrupt", "Corrupt a clean frame sequence with a noise schedule");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto noise = std::make_shared<NoiseFlags>();
    sub->add_option("input", *in, "Clean frame pattern, e.g. clean/%03d.pgm")->required();
    sub->add_option("output", *out, "Noisy frame pattern")->required();
    noise->add(sub);
    bind(sub, [this, in, out, noise] {
      const NoiseSchedule schedule = noise->schedule();
      const FrameSequence clean = load_sequence(*in);
      FrameSequence noisy;
      try {
        noisy = corrupt_sequence(clean, schedule, SeededRng(*seed_));
      } catch (const Error& e) {
        throw Error(e.code(), std::string("corrupt: ") + e.what());
      }
      ensure_pattern_dir(*out);
      save_sequence(noisy, *out);
      json specs = json::array();
      for (int t = 1; t <= static_cast<int>(clean.size()); ++t) specs.push_back(schedule_eval(schedule, t).describe());
      write_manifest(*out, {{"clean", *in}}, {{"noisy", *out}}, {{"frames", clean.size()}, {"noise_per_frame", specs}});
      std::cout << "corrupted " << clean.size() << " frames -> " << *out << '\n';
    });
  }

  void add_pretrain(CLI::App& app) {
    auto* sub = app.add_subcommand("pretrain", "Supervised AWGN pretraining on a directory of images");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto cfg = std::make_shared<PretrainConfig>();
    auto sigma = std::make_shared<double>(25.0);
    auto no_norm = std::make_shared<bool>(false);
    auto require_gain = std::make_shared<bool>(false);
    auto gate = std::make_shared<double>(3.0);
    sub->add_option("corpus", *corpus, "Directory of .pgm/.ppm training images")->required();
    sub->add_option("--out", *out, "Output weights file")->required();
    sub->add_option("--sigma", *sigma, "AWGN std in 8-bit units")->capture_default_str();
    sub->add_option("--steps", cfg->steps)->capture_default_str();
    sub->add_option("--batch", cfg->batch)->capture_default_str();
    sub->add_option("--crop", cfg->crop_size)->capture_default_str();
    sub->add_option("--lr", cfg->lr)->capture_default_str();
    sub->add_option("--depth", cfg->model.depth)->capture_default_str();
    sub->add_option("--width", cfg->model.width)->capture_default_str();
    sub->add_flag("--no-norm", *no_norm, "Disable batch normalization");
    sub->add_flag("--require-gain", *require_gain, "Exit 4 when the gain gate is not met");
    sub->add_option("--gate-db", *gate, "Required PSNR gain over the noisy input")->capture_default_str();
    bind(sub, [this, corpus, out, cfg, sigma, no_norm, require_gain, gate] {
      PretrainConfig config = *cfg;
      config.sigma = *sigma / 255.0;
      config.model.use_norm = !*no_norm;
      const FrameSequence images = load_corpus(*corpus);
      const PretrainResult result = pretrain(images, config, *seed_);
      ensure_parent(*out);
      save_weights(result.params, *out);
      const double gain = awgn_denoising_gain(result.params, images, config.sigma, splitmix64(*seed_ ^ 0x9a1eull));
      const bool met = gain >= *gate;
      json extra = {{"gain_db", gain},
                    {"gate_db", *gate},
                    {"gate_met", met},
                    {"final_loss", result.losses.empty() ? json(nullptr) : json(result.losses.back())},
                    {"weights_checksum", hex64(weights_checksum(result.params))}};
      write_manifest(*out, {{"corpus", *corpus}, {"images", images.size()}}, {{"weights", *out}}, extra);
      std::printf("pretrain: %d steps, gain %.2f dB over noisy input (gate %.2f dB: %s)\n", config.steps, gain, *gate,
                  met ? "met" : "NOT met");
      if (*require_gain && !met) {
        throw Error(ErrorCode::kNonFinite, "pretraining gain gate not met");
      }
    });
  }

  void add_finetune(CLI::App& app) {
    auto* sub = app.add_subcommand("finetune", "Frame-to-frame fine-tuning on a noisy video");
    auto noisy = std::make_shared<std::string>();
    auto weights = std::make_shared<std::string>();
    auto clean = std::make_shared<std::string>();
    auto out_frames = std::make_shared<std::string>();
    auto out_csv = std::make_shared<std::string>();
    auto out_weights = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("online");
    auto loss = std::make_shared<std::string>("l1");
    auto cfg = std::make_shared<FinetuneConfig>();
    auto freeze = std::make_shared<std::optional<int>>();
    auto reset_adam = std::make_shared<bool>(false);
    auto flow = std::make_shared<FlowFlags>();
    sub->add_option("noisy", *noisy, "Noisy frame pattern")->required();
    sub->add_option("--weights", *weights, "Pretrained weights")->required();
    sub->add_option("--mode", *mode)->check(CLI::IsMember({"online", "offline"}))->capture_default_str();
    sub->add_option("--lr", cfg->lr)->capture_default_str();
    sub->add_option("--iters", cfg->n_iters, "Adam steps per frame (online)")->capture_default_str();
    sub->add_option("--epochs", cfg->epochs, "Passes over all pairs (offline)")->capture_default_str();
    sub->add_option("--loss", *loss)->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
    sub->add_flag("--symmetric", cfg->symmetric, "Also train on the next frame warped back");
    sub->add_option("--freeze-after", *freeze, "Stop online updates after this 1-based frame");
    sub->add_flag("--freeze-norm-stats", cfg->freeze_norm_stats);
    sub->add_flag("--reset-adam", *reset_adam, "Fresh Adam moments for every frame");
    sub->add_option("--clean", *clean, "Clean frame pattern (adds PSNR columns)");
    sub->add_option("--out-frames", *out_frames, "Denoised frame pattern");
    sub->add_option("--out-csv", *out_csv, "Per-frame log");
    sub->add_option("--out-weights", *out_weights, "Final weights");
    flow->add(sub);
    bind(sub, [=, this] {
      if (out_frames->empty() && out_csv->empty() && out_weights->empty()) {
        throw Error(ErrorCode::kInvalidArgument, "finetune: give at least one of --out-frames/--out-csv/--out-weights");
      }
      FinetuneConfig config = *cfg;
      config.mode = *mode == "online" ? FinetuneMode::kOnline : FinetuneMode::kOffline;
      config.loss = *loss == "l1" ? LossKind::kL1 : LossKind::kL2;
      config.freeze_after = *freeze;
      config.carry_adam = !*reset_adam;
      config.shuffle_seed = *seed_;
      const FrameSequence video = load_sequence(*noisy);
      std::optional<FrameSequence> reference;
      if (!clean->empty()) reference = load_sequence(*clean, static_cast<int>(video.size()));
      const ModelParams params0 = load_weights(*weights);
      const FinetuneResult result =
          finetune(video, params0, flow->flow, flow->occlusion, config, reference ? &*reference : nullptr);

      json outputs = json::object();
      if (!out_frames->empty()) {
        ensure_pattern_dir(*out_frames);
        save_sequence(result.denoised, *out_frames);
        outputs["frames"] = *out_frames;
      }
      std::vector<std::string> comments;
      if (reference) {
        const double ft = mean_psnr(result.log, 1, static_cast<int>(video.size()));
        const double pre = mean_psnr(result.log, 1, static_cast<int>(video.size()), true);
        char buf[128];
        std::snprintf(buf, sizeof buf, "mean psnr_finetuned=%.4f psnr_pretrained=%.4f", ft, pre);
        comments.emplace_back(buf);
        std::printf("finetune: mean PSNR %.2f dB (pretrained %.2f dB)\n", ft, pre);
      }
      if (!out_csv->empty()) {
        auto rows = to_metrics_rows(result.log);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          rows[i].labels.emplace_back("updated", result.log[i].updated ? "1" : "0");
          rows[i].labels.emplace_back("skipped", result.log[i].skipped ? "1" : "0");
          rows[i].labels.emplace_back("weights_checksum", hex64(result.log[i].weights_checksum));
        }
        ensure_parent(*out_csv);
        write_csv(rows, *out_csv, "psnr_finetuned", comments);
        outputs["csv"] = *out_csv;
      }
      if (!out_weights->empty()) {
        ensure_parent(*out_weights);
        save_weights(result.params, *out_weights);
        outputs["weights"] = *out_weights;
      }
      const std::string primary = !out_csv->empty() ? *out_csv : !out_weights->empty() ? *out_weights : *out_frames;
      json inputs = {{"noisy", *noisy}, {"weights", *weights}};
      if (reference) inputs["clean"] = *clean;
      write_manifest(primary, inputs, outputs, {{"weights_checksum", hex64(weights_checksum(result.params))}});
    });
  }

  void add_denoise(CLI::App& app) {
    auto* sub = app.add_subcommand("denoise", "Frame-wise denoising with fixed weights");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto weights = std::make_shared<std::string>();
    sub->add_option("input", *in, "Noisy frame pattern")->required();
    sub->add_option("output", *out, "Denoised frame pattern")->required();
    sub->add_option("--weights", *weights)->required();
    bind(sub, [this, in, out, weights] {
      const ModelParams params = load_weights(*weights);
      const FrameSequence video = load_sequence(*in);
      FrameSequence denoised(video.size());
      parallel_for(video.size(), [&](std::size_t i) {
        try {
          denoised[i] = denoise(params, video[i]);
        } catch (const Error& e) {
          throw Error(e.code(), "frame " + std::to_string(i + 1) + ": " + e.what());
        }
      });
      ensure_pattern_dir(*out);
      save_sequence(denoised, *out);
      write_manifest(*out, {{"noisy", *in}, {"weights", *weights}}, {{"frames", *out}});
    });
  }

  void add_flow(CLI::App& app) {
    auto* sub = app.add_subcommand("flow", "Debug dump of the flow and occlusion mask between two frames");
    auto target = std::make_shared<std::string>();
    auto reference = std::make_shared<std::string>();
    auto out_flo = std::make_shared<std::string>();
    auto out_mask = std::make_shared<std::string>();
    auto out_warped = std::make_shared<std::string>();
    auto flow = std::make_shared<FlowFlags>();
    sub->add_option("target", *target, "Frame f_t (PGM)")->required();
    sub->add_option("reference", *reference, "Frame registered onto f_t (PGM)")->required();
    sub->add_option("--out-flo", *out_flo, "Middlebury .flo output")->required();
    sub->add_option("--out-mask", *out_mask, "Occlusion mask PGM (255 = used in the loss)");
    sub->add_option("--out-warped", *out_warped, "Warped reference PGM");
    flow->add(sub);
    bind(sub, [=, this] {
      const Frame ft = read_pgm(*target);
      const Frame fr = read_pgm(*reference);
      if (!ft.same_dims(fr)) throw Error(ErrorCode::kInconsistentDims, "flow: frames differ in size");
      const TrainingPair pair = build_pair(ft, fr, flow->flow, flow->occlusion);
      ensure_parent(*out_flo);
      write_flo(pair.flow, *out_flo);
      json outputs = {{"flo", *out_flo}};
      if (!out_mask->empty()) {
        ensure_parent(*out_mask);
        write_mask_pgm(pair.mask, *out_mask);
        outputs["mask"] = *out_mask;
      }
      if (!out_warped->empty()) {
        ensure_parent(*out_warped);
        write_pgm(pair.warped, *out_warped);
        outputs["warped"] = *out_warped;
      }
      write_manifest(*out_flo, {{"target", *target}, {"reference", *reference}}, outputs,
                     {{"visible_fraction", pair.visible_fraction()}});
      std::printf("flow: visible fraction %.4f\n", pair.visible_fraction());
    });
  }

  void add_eval(CLI::App& app) {
    auto* sub = app.add_subcommand("eval", "Per-frame PSNR of a candidate sequence against a reference");
    auto candidate = std::make_shared<std::string>();
    auto reference = std::make_shared<std::string>();
    auto out_csv = std::make_shared<std::string>();
    sub->add_option("candidate", *candidate)->required();
    sub->add_option("reference", *reference)->required();
    sub->add_option("--out-csv", *out_csv)->required();
    bind(sub, [this, candidate, reference, out_csv] {
      const FrameSequence cand = load_sequence(*candidate);
      const FrameSequence ref = load_sequence(*reference);
      if (cand.size() != ref.size()) {
        throw Error(ErrorCode::kInconsistentDims, "eval: candidate has " + std::to_string(cand.size()) +
                                                      " frames, reference has " + std::to_string(ref.size()));
      }
      std::vector<MetricsRow> rows;
      std::vector<double> values;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (!cand[i].same_dims(ref[i])) {
          throw Error(ErrorCode::kInconsistentDims, "eval: frame " + std::to_string(i + 1) + " differs in size");
        }
        MetricsRow row;
        row.t = static_cast<int>(i) + 1;
        row.psnr_db = psnr(cand[i], ref[i]);
        values.push_back(row.psnr_db);
        rows.push_back(std::move(row));
      }
      const Summary s = summarize(values);
      char buf[96];
      std::snprintf(buf, sizeof buf, "summary mean=%.4f std=%.4f", s.mean, s.stddev);
      ensure_parent(*out_csv);
      write_csv(rows, *out_csv, "psnr_db", {buf});
      write_manifest(*out_csv, {{"candidate", *candidate}, {"reference", *reference}}, {{"csv", *out_csv}},
                     {{"mean_psnr_db", s.mean}, {"std_psnr_db", s.stddev}});
      std::printf("eval: %zu frames, mean %.4f dB, std %.4f dB\n", rows.size(), s.mean, s.stddev);
    });
  }

  void add_synth(CLI::App& app) {
    auto* sub = app.add_subcommand("synth", "Write a synthetic clean video or texture corpus");
    auto out = std::make_shared<std::string>();
    auto scene = std::make_shared<SceneConfig>();
    auto textures = std::make_shared<bool>(false);
    sub->add_option("output", *out, "Frame pattern, e.g. clean/%03d.pgm")->required();
    sub->add_option("--rows", scene->rows)->capture_default_str();
    sub->add_option("--cols", scene->cols)->capture_default_str();
    sub->add_option("--frames", scene->frames, "Frames (or images with --textures)")->capture_default_str();
    sub->add_option("--pan-x", scene->pan_x)->capture_default_str();
    sub->add_option("--pan-y", scene->pan_y)->capture_default_str();
    sub->add_option("--object-radius", scene->object_radius)->capture_default_str();
    sub->add_flag("--textures", *textures, "Independent texture images instead of a video");
    bind(sub, [this, out, scene, textures] {
      if (scene->rows < 8 || scene->cols < 8 || scene->frames < 1) {
        throw Error(ErrorCode::kInvalidArgument, "synth: need rows, cols >= 8 and frames >= 1");
      }
      FrameSequence frames;
      if (*textures) {
        for (int i = 0; i < scene->frames; ++i) {
          frames.push_back(synthetic_texture(scene->rows, scene->cols, splitmix64(*seed_ + static_cast<std::uint64_t>(i))));
        }
      } else {
        frames = synthetic_video(*scene, *seed_);
      }
      ensure_pattern_dir(*out);
      save_sequence(frames, *out);
      write_manifest(*out, json::object(), {{"frames", *out}}, {{"count", frames.size()}});
    });
  }

  void add_replay(CLI::App& app) {
    auto* sub = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
    auto path = std::make_shared<std::string>();
    sub->add_option("manifest", *path)->required()->check(CLI::ExistingFile);
    bind(sub, [path] {
      std::ifstream in(*path);
      json m;
      try {
        m = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kMalformedHeader, "replay: " + *path + ": " + e.what());
      }
      if (!m.contains("args") || !m["args"].is_array()) {
        throw Error(ErrorCode::kMalformedHeader, "replay: " + *path + " has no args array");
      }
      const auto args = m["args"].get<std::vector<std::string>>();
      if (!args.empty() && std::find(args.begin(), args.end(), "replay") != args.end()) {
        throw Error(ErrorCode::kInvalidArgument, "replay: refusing to replay a replay");
      }
      const int status = run_cli(args);
      if (status != 0) throw Error(ErrorCode::kIo, "replay: command exited with status " + std::to_string(status));
    });
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args) { return Runner(args).run(); }

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace f2f
