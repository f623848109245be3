#include "f2f/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "f2f/error.hpp"
#include "f2f/image_io.hpp"
#include "f2f/parallel.hpp"

namespace f2f {

void FinetuneConfig::validate() const {
  if (!(lr >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "fine-tuning lr must be >= 0");
  if (n_iters < 0) throw Error(ErrorCode::kInvalidArgument, "fine-tuning iterations must be >= 0");
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "fine-tuning epochs must be >= 0");
  if (freeze_after && *freeze_after < 1) throw Error(ErrorCode::kInvalidArgument, "freeze_after must be >= 1");
}

void PretrainConfig::validate() const {
  model.validate();
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "pretraining sigma must be >= 0");
  if (crop_size < model.kernel) throw Error(ErrorCode::kInvalidArgument, "crop size smaller than the kernel");
  if (batch < 1) throw Error(ErrorCode::kInvalidArgument, "pretraining batch must be >= 1");
  if (steps < 0) throw Error(ErrorCode::kInvalidArgument, "pretraining steps must be >= 0");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "pretraining lr must be positive");
}

namespace {

Var loss_node(Tape& tape, const Var& prediction, const Tensor4& target, const Tensor4& mask, LossKind loss) {
  return loss == LossKind::kL1 ? masked_l1_loss(tape, prediction, target, mask) : l2_loss(tape, prediction, target, mask);
}

// Crop with one of the 8 dihedral orientations.
Frame crop_oriented(const Frame& src, int top, int left, int size, int orientation) {
  Frame out(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      int y = r;
      int x = c;
      if (orientation & 1) std::swap(y, x);
      if (orientation & 2) y = size - 1 - y;
      if (orientation & 4) x = size - 1 - x;
      out(r, c) = src(top + y, left + x);
    }
  }
  return out;
}

}  // namespace

double train_step(ModelParams& params, const Tensor4& input, const Tensor4& target, const Tensor4& mask, LossKind loss,
                  AdamState& adam, bool update_stats) {
  Tape tape;
  Var x = tape.leaf(input);
  Var denoised = denoise_graph(tape, params, x, NormMode::kTrain, update_stats);
  Var l = loss_node(tape, denoised, target, mask, loss);
  const double value = l->value[0];
  if (!std::isfinite(value)) throw Error(ErrorCode::kNonFinite, "training loss is not finite");
  tape.backward(l);
  auto ps = params.parameters();
  adam_step(ps, adam);
  zero_grads<float>(ps);
  return value;
}

double evaluate_loss(const ModelParams& params, const Tensor4& input, const Tensor4& target, const Tensor4& mask,
                     LossKind loss) {
  auto& p = const_cast<ModelParams&>(params);
  Tape tape(false);
  Var x = tape.leaf(input);
  Var denoised = denoise_graph(tape, p, x, NormMode::kTrain, false);
  return loss_node(tape, denoised, target, mask, loss)->value[0];
}

Tensor4 mask_tensor(const OcclusionMask& mask) {
  Tensor4 t({1, 1, mask.rows(), mask.cols()});
  for (std::size_t i = 0; i < mask.size(); ++i) t[i] = mask[i] ? 1.0f : 0.0f;
  return t;
}

PretrainResult pretrain(const FrameSequence& corpus, const PretrainConfig& config, std::uint64_t seed) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "pretraining corpus is empty");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (std::min(corpus[i].rows(), corpus[i].cols()) < config.crop_size) {
      throw Error(ErrorCode::kInvalidArgument, "corpus image " + std::to_string(i + 1) + " is smaller than the " +
                                                   std::to_string(config.crop_size) + "px crop");
    }
  }

  PretrainResult result{init_params(config.model, seed), {}};
  const SeededRng rng(seed);
  AdamState adam(AdamOptions{config.lr});
  const Tensor4 full_mask({config.batch, 1, config.crop_size, config.crop_size}, 1.0f);

  for (int step = 0; step < config.steps; ++step) {
    const int quarter = std::min(3, 4 * step / std::max(1, config.steps));
    adam.options.lr = config.lr * std::pow(0.5, quarter);

    auto crops = rng.stream(step, StreamPurpose::kPretrainCrops);
    auto noise = rng.stream(step, StreamPurpose::kPretrainNoise);
    std::normal_distribution<double> normal(0.0, config.sigma);
    FrameSequence clean;
    for (int b = 0; b < config.batch; ++b) {
      const Frame& src = corpus[std::uniform_int_distribution<std::size_t>(0, corpus.size() - 1)(crops)];
      const int top = std::uniform_int_distribution<int>(0, src.rows() - config.crop_size)(crops);
      const int left = std::uniform_int_distribution<int>(0, src.cols() - config.crop_size)(crops);
      const int orientation = std::uniform_int_distribution<int>(0, 7)(crops);
      clean.push_back(crop_oriented(src, top, left, config.crop_size, orientation));
    }
    const Tensor4 target = to_tensor(clean);
    Tensor4 noisy = target;
    for (auto& v : noisy.values()) v = static_cast<float>(v + normal(noise));
    result.losses.push_back(train_step(result.params, noisy, target, full_mask, LossKind::kL2, adam));
  }
  return result;
}

double awgn_denoising_gain(const ModelParams& params, const FrameSequence& images, double sigma, std::uint64_t seed) {
  if (images.empty()) throw Error(ErrorCode::kEmptyCorpus, "no images to measure the denoising gain on");
  const SeededRng rng(seed);
  std::vector<double> gains(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const Frame noisy = apply_noise(images[i], NoiseSpec::awgn(sigma), rng, static_cast<std::int64_t>(i));
    gains[i] = psnr(denoise(params, noisy), images[i]) - psnr(noisy, images[i]);
  });
  return summarize(gains).mean;
}

PairSet build_pairs(const FrameSequence& video, const FlowConfig& flow_config, const OcclusionConfig& occlusion_config,
                    bool symmetric) {
  check_sequence(video);
  flow_config.validate();
  occlusion_config.validate();
  const std::size_t n = video.size();
  PairSet pairs;
  pairs.backward.resize(n);
  pairs.forward.resize(n);
  parallel_for(n, [&](std::size_t i) {
    if (i > 0) pairs.backward[i] = build_pair(video[i], video[i - 1], flow_config, occlusion_config);
    if (symmetric && i + 1 < n) pairs.forward[i] = build_pair(video[i], video[i + 1], flow_config, occlusion_config);
  });
  return pairs;
}

FrameSequence denoise_sequence(const ModelParams& params, const FrameSequence& video) {
  FrameSequence out(video.size());
  for (std::size_t i = 0; i < video.size(); ++i) out[i] = denoise(params, video[i]);
  return out;
}

namespace {

struct PsnrContext {
  const FrameSequence* clean;
  const ModelParams* params0;

  void fill(FrameLog& log, std::size_t i, const Frame& noisy, const Frame& denoised) const {
    if (clean == nullptr) return;
    log.psnr_finetuned = psnr(denoised, (*clean)[i]);
    log.psnr_pretrained = psnr(denoise(*params0, noisy), (*clean)[i]);
  }
};

void check_video(const FrameSequence& video, const FrameSequence* clean) {
  check_sequence(video);
  if (video.size() < 2) throw Error(ErrorCode::kInvalidArgument, "fine-tuning needs at least 2 frames");
  if (clean != nullptr) {
    if (clean->size() != video.size()) {
      throw Error(ErrorCode::kInconsistentDims, "clean sequence has " + std::to_string(clean->size()) +
                                                    " frames, noisy has " + std::to_string(video.size()));
    }
    for (std::size_t i = 0; i < clean->size(); ++i) {
      if (!(*clean)[i].same_dims(video[i])) {
        throw Error(ErrorCode::kInconsistentDims, "clean frame " + std::to_string(i + 1) + " differs in size");
      }
    }
  }
}

void check_pairs(const FrameSequence& video, const PairSet& pairs) {
  if (pairs.backward.size() != video.size() || pairs.forward.size() != video.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pair set does not match the video length");
  }
}

[[noreturn]] void rethrow_with_frame(const Error& e, std::size_t i) {
  throw Error(e.code(), "frame " + std::to_string(i + 1) + ": " + e.what());
}

}  // namespace

FinetuneResult finetune_online(const FrameSequence& video, const PairSet& pairs, const ModelParams& params0,
                               const FinetuneConfig& config, const FrameSequence* clean) {
  config.validate();
  check_video(video, clean);
  check_pairs(video, pairs);

  FinetuneResult result;
  result.params = params0;
  const PsnrContext ctx{clean, &params0};
  AdamState adam(AdamOptions{config.lr});

  for (std::size_t i = 0; i < video.size(); ++i) {
    FrameLog log;
    log.t = static_cast<int>(i) + 1;
    const auto& back = pairs.backward[i];
    if (back) log.masked_fraction = 1.0 - back->visible_fraction();
    const bool frozen = config.freeze_after && log.t > *config.freeze_after;

    if (i > 0 && back && !frozen) {
      log.skipped = back->skipped;
      if (!back->skipped && config.n_iters > 0) {
        try {
          if (!config.carry_adam) adam.reset();
          const Tensor4 input = to_tensor(video[i]);
          const Tensor4 target = to_tensor(back->warped);
          const Tensor4 mask = mask_tensor(back->mask);
          const auto& fwd = pairs.forward[i];
          const bool alternate = config.symmetric && fwd && !fwd->skipped;
          Tensor4 fwd_target, fwd_mask;
          if (alternate) {
            fwd_target = to_tensor(fwd->warped);
            fwd_mask = mask_tensor(fwd->mask);
          }
          const bool update_stats = !config.freeze_norm_stats;
          for (int k = 0; k < config.n_iters; ++k) {
            const bool use_forward = alternate && (k % 2 == 1);
            const double loss = use_forward
                                    ? train_step(result.params, input, fwd_target, fwd_mask, config.loss, adam, update_stats)
                                    : train_step(result.params, input, target, mask, config.loss, adam, update_stats);
            if (k == 0) log.loss_before = loss;
          }
          log.loss_after = evaluate_loss(result.params, input, target, mask, config.loss);
          log.updated = true;
        } catch (const Error& e) {
          rethrow_with_frame(e, i);
        }
      }
    }
    Frame out = denoise(result.params, video[i]);
    ctx.fill(log, i, video[i], out);
    log.weights_checksum = weights_checksum(result.params);
    result.denoised.push_back(std::move(out));
    result.log.push_back(std::move(log));
  }
  return result;
}

FinetuneResult finetune_online(const FrameSequence& video, const ModelParams& params0, const FlowConfig& flow_config,
                               const OcclusionConfig& occlusion_config, const FinetuneConfig& config,
                               const FrameSequence* clean) {
  check_video(video, clean);
  return finetune_online(video, build_pairs(video, flow_config, occlusion_config, config.symmetric), params0, config,
                         clean);
}

FinetuneResult finetune_offline(const FrameSequence& video, const PairSet& pairs, const ModelParams& params0,
                                const FinetuneConfig& config, const FrameSequence* clean) {
  config.validate();
  check_video(video, clean);
  check_pairs(video, pairs);

  struct Sample {
    std::size_t frame;
    const TrainingPair* pair;
  };
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < video.size(); ++i) {
    if (pairs.backward[i] && !pairs.backward[i]->skipped) samples.push_back({i, &*pairs.backward[i]});
    if (config.symmetric && pairs.forward[i] && !pairs.forward[i]->skipped) samples.push_back({i, &*pairs.forward[i]});
  }
  std::vector<Tensor4> inputs(video.size());
  for (std::size_t i = 0; i < video.size(); ++i) inputs[i] = to_tensor(video[i]);
  std::vector<Tensor4> targets, masks;
  for (const auto& s : samples) {
    targets.push_back(to_tensor(s.pair->warped));
    masks.push_back(mask_tensor(s.pair->mask));
  }

  FinetuneResult result;
  result.params = params0;
  AdamState adam(AdamOptions{config.lr});
  const SeededRng rng(config.shuffle_seed);
  std::vector<std::size_t> order(samples.size());
  const bool update_stats = !config.freeze_norm_stats;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto gen = rng.stream(epoch, StreamPurpose::kShuffle);
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t j : order) {
      try {
        train_step(result.params, inputs[samples[j].frame], targets[j], masks[j], config.loss, adam, update_stats);
      } catch (const Error& e) {
        rethrow_with_frame(e, samples[j].frame);
      }
    }
  }

  const PsnrContext ctx{clean, &params0};
  const std::uint64_t checksum = weights_checksum(result.params);
  for (std::size_t i = 0; i < video.size(); ++i) {
    FrameLog log;
    log.t = static_cast<int>(i) + 1;
    const auto& back = pairs.backward[i];
    if (back) {
      log.masked_fraction = 1.0 - back->visible_fraction();
      log.skipped = back->skipped;
      if (!back->skipped) {
        const Tensor4 target = to_tensor(back->warped);
        const Tensor4 mask = mask_tensor(back->mask);
        log.loss_before = evaluate_loss(params0, inputs[i], target, mask, config.loss);
        log.loss_after = evaluate_loss(result.params, inputs[i], target, mask, config.loss);
      }
    }
    log.updated = config.epochs > 0 && !samples.empty();
    Frame out = denoise(result.params, video[i]);
    ctx.fill(log, i, video[i], out);
    log.weights_checksum = checksum;
    result.denoised.push_back(std::move(out));
    result.log.push_back(std::move(log));
  }
  return result;
}

FinetuneResult finetune_offline(const FrameSequence& video, const ModelParams& params0, const FlowConfig& flow_config,
                                const OcclusionConfig& occlusion_config, const FinetuneConfig& config,
                                const FrameSequence* clean) {
  check_video(video, clean);
  return finetune_offline(video, build_pairs(video, flow_config, occlusion_config, config.symmetric), params0, config,
                          clean);
}

FinetuneResult finetune(const FrameSequence& video, const ModelParams& params0, const FlowConfig& flow_config,
                        const OcclusionConfig& occlusion_config, const FinetuneConfig& config,
                        const FrameSequence* clean) {
  return config.mode == FinetuneMode::kOnline
             ? finetune_online(video, params0, flow_config, occlusion_config, config, clean)
             : finetune_offline(video, params0, flow_config, occlusion_config, config, clean);
}

FrameSequence corrupt_sequence(const FrameSequence& clean, const NoiseSchedule& schedule, const SeededRng& rng) {
  schedule.validate();
  FrameSequence out(clean.size());
  parallel_for(clean.size(), [&](std::size_t i) {
    const int t = static_cast<int>(i) + 1;
    out[i] = apply_noise(clean[i], schedule_eval(schedule, t), rng, t);
  });
  return out;
}

LifelongResult run_lifelong(const FrameSequence& clean, const NoiseSchedule& schedule, const ModelParams& params0,
                            const FlowConfig& flow_config, const OcclusionConfig& occlusion_config,
                            const FinetuneConfig& config, std::uint64_t noise_seed) {
  LifelongResult result;
  result.noisy = corrupt_sequence(clean, schedule, SeededRng(noise_seed));
  result.run = finetune_online(result.noisy, params0, flow_config, occlusion_config, config, &clean);
  for (auto& log : result.run.log) log.active_noise = schedule_eval(schedule, log.t).describe();
  return result;
}

std::vector<MetricsRow> to_metrics_rows(const std::vector<FrameLog>& log) {
  std::vector<MetricsRow> rows;
  for (const auto& l : log) {
    MetricsRow row;
    row.t = l.t;
    row.psnr_db = l.psnr_finetuned;
    row.aux = {{"psnr_pretrained", l.psnr_pretrained},
               {"loss_before", l.loss_before},
               {"loss_after", l.loss_after},
               {"masked_fraction", l.masked_fraction}};
    row.labels = {{"active_noise_spec", l.active_noise}};
    rows.push_back(std::move(row));
  }
  return rows;
}

double mean_psnr(const std::vector<FrameLog>& log, int first, int last, bool pretrained) {
  std::vector<double> values;
  for (const auto& l : log) {
    if (l.t >= first && l.t <= last) values.push_back(pretrained ? l.psnr_pretrained : l.psnr_finetuned);
  }
  return summarize(values).mean;
}

}  // namespace f2f
