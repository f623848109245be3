#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "f2f/adam.hpp"
#include "f2f/metrics.hpp"
#include "f2f/model.hpp"
#include "f2f/noise.hpp"
#include "f2f/warp.hpp"

namespace f2f {

enum class LossKind { kL1, kL2 };
enum class FinetuneMode { kOnline, kOffline };

struct FinetuneConfig {
  double lr = 5e-5;
  // Adam steps per frame (online).
  int n_iters = 20;
  FinetuneMode mode = FinetuneMode::kOnline;
  // Shuffled passes over all pairs (offline), one step per pair.
  int epochs = 20;
  LossKind loss = LossKind::kL1;
  // Also train on f_{t+1} warped onto f_t.
  bool symmetric = false;
  // Keep Adam moments across frames (online).
  bool carry_adam = true;
  // 1-based frame after which online updates stop.
  std::optional<int> freeze_after;
  bool freeze_norm_stats = false;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct PretrainConfig {
  ModelConfig model;
  double sigma = 25.0 / 255.0;
  int crop_size = 48;
  int batch = 16;
  int steps = 2000;
  // Halved after every quarter of the steps.
  double lr = 1e-3;

  void validate() const;
};

struct PretrainResult {
  ModelParams params;
  std::vector<double> losses;
};

// Supervised L2 training on random crops with fresh AWGN per step.
PretrainResult pretrain(const FrameSequence& corpus, const PretrainConfig& config, std::uint64_t seed);

// Mean PSNR gain (dB) of denoise() over the noisy input on AWGN-corrupted
// copies of the given images; the stream for image i is (seed, i).
double awgn_denoising_gain(const ModelParams& params, const FrameSequence& images, double sigma, std::uint64_t seed);

// One Adam update on the loss between denoise(input) and target under mask.
// Returns the loss before the update.
double train_step(ModelParams& params, const Tensor4& input, const Tensor4& target, const Tensor4& mask,
                  LossKind loss, AdamState& adam, bool update_stats = true);

// Masked loss of the current parameters in train-mode normalization, without
// touching parameters or running statistics.
double evaluate_loss(const ModelParams& params, const Tensor4& input, const Tensor4& target, const Tensor4& mask,
                     LossKind loss);

Tensor4 mask_tensor(const OcclusionMask& mask);

// Training pairs for every frame: backward[i] registers frame i-1 onto i,
// forward[i] registers frame i+1 onto i (only when symmetric).
struct PairSet {
  std::vector<std::optional<TrainingPair>> backward;
  std::vector<std::optional<TrainingPair>> forward;
};

PairSet build_pairs(const FrameSequence& video, const FlowConfig& flow_config, const OcclusionConfig& occlusion_config,
                    bool symmetric);

struct FrameLog {
  int t = 0;
  double psnr_finetuned = std::numeric_limits<double>::quiet_NaN();
  double psnr_pretrained = std::numeric_limits<double>::quiet_NaN();
  double loss_before = std::numeric_limits<double>::quiet_NaN();
  double loss_after = std::numeric_limits<double>::quiet_NaN();
  // Fraction of pixels excluded from the loss.
  double masked_fraction = std::numeric_limits<double>::quiet_NaN();
  bool updated = false;
  bool skipped = false;
  std::string active_noise;
  std::uint64_t weights_checksum = 0;
};

struct FinetuneResult {
  FrameSequence denoised;
  std::vector<FrameLog> log;
  ModelParams params;
};

// Frame-by-frame warm-started fine-tuning. clean, when given, enables PSNR
// logging. Frame 1 is denoised with params0.
FinetuneResult finetune_online(const FrameSequence& video, const ModelParams& params0, const FlowConfig& flow_config,
                               const OcclusionConfig& occlusion_config, const FinetuneConfig& config,
                               const FrameSequence* clean = nullptr);
FinetuneResult finetune_online(const FrameSequence& video, const PairSet& pairs, const ModelParams& params0,
                               const FinetuneConfig& config, const FrameSequence* clean = nullptr);

// One parameter vector trained over all pairs of the video, then applied to every frame.
FinetuneResult finetune_offline(const FrameSequence& video, const ModelParams& params0, const FlowConfig& flow_config,
                                const OcclusionConfig& occlusion_config, const FinetuneConfig& config,
                                const FrameSequence* clean = nullptr);
FinetuneResult finetune_offline(const FrameSequence& video, const PairSet& pairs, const ModelParams& params0,
                                const FinetuneConfig& config, const FrameSequence* clean = nullptr);

// Dispatches on config.mode.
FinetuneResult finetune(const FrameSequence& video, const ModelParams& params0, const FlowConfig& flow_config,
                        const OcclusionConfig& occlusion_config, const FinetuneConfig& config,
                        const FrameSequence* clean = nullptr);

// denoise() applied to every frame.
FrameSequence denoise_sequence(const ModelParams& params, const FrameSequence& video);

// Corrupts frame t (1-based) with schedule_eval(schedule, t) on stream t.
FrameSequence corrupt_sequence(const FrameSequence& clean, const NoiseSchedule& schedule, const SeededRng& rng);

struct LifelongResult {
  FrameSequence noisy;
  FinetuneResult run;
};

// Corrupts the clean video per schedule and fine-tunes online on it.
LifelongResult run_lifelong(const FrameSequence& clean, const NoiseSchedule& schedule, const ModelParams& params0,
                            const FlowConfig& flow_config, const OcclusionConfig& occlusion_config,
                            const FinetuneConfig& config, std::uint64_t noise_seed);

// One CSV row per frame: psnr_finetuned, psnr_pretrained, loss_before,
// loss_after, masked_fraction, active_noise_spec.
std::vector<MetricsRow> to_metrics_rows(const std::vector<FrameLog>& log);

// Mean of psnr_finetuned over 1-based frames [first, last].
double mean_psnr(const std::vector<FrameLog>& log, int first, int last, bool pretrained = false);

}  // namespace f2f
