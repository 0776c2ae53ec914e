#include "topohead/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace topohead::synth {

void fill_mixture_head(std::span<float> out, std::size_t n, double t) {
  const double off = (1.0 - t) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = static_cast<float>(i == j ? off + t : off);
    }
  }
}

void fill_random_head(std::span<float> out, std::size_t n, double temperature,
                      std::mt19937_64& rng) {
  std::normal_distribution<double> logit(0.0, temperature);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (auto& v : row) {
      v = std::exp(logit(rng));
      z += v;
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<float>(row[j] / z);
  }
}

io::SampleBundle random_bundle(std::size_t frames, std::size_t mfcc_frames,
                               std::mt19937_64& rng) {
  const auto n = static_cast<std::uint32_t>(frames);
  constexpr auto kL = static_cast<std::uint32_t>(io::kLayers);
  constexpr auto kH = static_cast<std::uint32_t>(io::kHeads);
  constexpr auto kD = static_cast<std::uint32_t>(io::kEmbeddingDim);
  constexpr auto kC = static_cast<std::uint32_t>(io::kMfccCoefficients);
  io::SampleBundle b;
  b.attention = io::Tensor({kL, kH, n, n},
                           std::vector<float>(io::kLayers * io::kHeads * frames * frames));
  std::uniform_real_distribution<double> temperature(0.5, 2.5);
  for (std::size_t flat = 0; flat < attn::kHeadCount; ++flat) {
    fill_random_head(std::span<float>(b.attention.data).subspan(flat * frames * frames,
                                                                 frames * frames),
                     frames, temperature(rng), rng);
  }
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  for (std::size_t layer = 0; layer < io::kEmbeddingTensors; ++layer) {
    std::vector<float> x(frames * io::kEmbeddingDim);
    for (auto& v : x) v = gauss(rng);
    b.embeddings.emplace_back(std::vector<std::uint32_t>{n, kD}, std::move(x));
  }
  const auto t = static_cast<std::uint32_t>(mfcc_frames);
  std::vector<float> mfcc(mfcc_frames * io::kMfccCoefficients);
  for (auto& v : mfcc) v = gauss(rng);
  b.mfcc = io::Tensor({t, kC}, std::move(mfcc));
  std::vector<float> plp(mfcc_frames * io::kMfccCoefficients);
  for (auto& v : plp) v = gauss(rng);
  b.plp = io::Tensor({t, kC}, std::move(plp));
  return b;
}

namespace {

std::vector<std::string> phoneme_track(std::size_t frames) {
  static const char* kPhones[] = {"sil", "AY1", "N", "OW1", "IH1", "T", "sp"};
  constexpr std::size_t kCount = std::size(kPhones);
  std::vector<std::string> labels(frames);
  for (std::size_t i = 0; i < frames; ++i) labels[i] = kPhones[(i * kCount) / frames];
  return labels;
}

std::string sample_id(std::size_t k) {
  std::string digits = std::to_string(k);
  digits.insert(0, digits.size() < 4 ? 4 - digits.size() : 0, '0');
  return "s" + digits;
}

}  // namespace

std::vector<Sample> make_dataset(const DatasetConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Sample> out;
  out.reserve(cfg.samples);
  const std::size_t n = cfg.frames;
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    Sample s;
    const bool is_b = k % 2 == 1;
    s.record.id = sample_id(k);
    s.record.tensor_dir = s.record.id;
    s.record.label = is_b ? "b" : "a";
    s.record.group = is_b ? "B" : "A";
    s.record.speaker = "spk" + std::to_string(k % 4);
    s.record.duration_s = 0.02 * static_cast<double>(n);
    s.bundle = random_bundle(n, cfg.mfcc_frames, rng);
    s.bundle.phoneme_labels = phoneme_track(n);

    // Per-sample MFCC offset drives the correlated head.
    s.mfcc_offset = gauss(rng);
    for (auto& v : s.bundle.mfcc.data) v = static_cast<float>(v * 0.3 + s.mfcc_offset);

    auto head_span = [&](attn::HeadIndex h) {
      return std::span<float>(s.bundle.attention.data).subspan(h.flat() * n * n, n * n);
    };
    const double shift = is_b ? cfg.effect_size * cfg.mix_std : 0.0;
    const double t_sep = std::clamp(cfg.base_mix + shift + cfg.mix_std * gauss(rng), 0.0, 1.0);
    fill_mixture_head(head_span(cfg.separating_head), n, t_sep);
    const double t_corr =
        std::clamp(0.5 + 0.1 * s.mfcc_offset + 0.02 * gauss(rng), 0.0, 1.0);
    fill_mixture_head(head_span(cfg.correlated_head), n, t_corr);
    out.push_back(std::move(s));
  }
  return out;
}

std::filesystem::path write_dataset(const std::filesystem::path& root,
                                    const DatasetConfig& cfg) {
  std::filesystem::create_directories(root);
  const auto samples = make_dataset(cfg);
  std::vector<io::SampleRecord> records;
  records.reserve(samples.size() + cfg.pairs);
  for (const auto& s : samples) {
    io::write_sample_bundle(root / s.record.tensor_dir, s.bundle);
    records.push_back(s.record);
  }
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  std::uniform_int_distribution<std::size_t> pick(0, samples.empty() ? 0 : samples.size() - 1);
  for (std::size_t p = 0; p < cfg.pairs && samples.size() >= 2; ++p) {
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    io::SampleRecord pair;
    pair.id = "p" + sample_id(p).substr(1);
    pair.label = samples[i].record.label == samples[j].record.label ? "same" : "different";
    pair.pair_of = std::make_pair(samples[i].record.id, samples[j].record.id);
    records.push_back(std::move(pair));
  }
  const auto manifest = root / "manifest.jsonl";
  io::write_manifest(manifest, records);
  return manifest;
}

}  // namespace topohead::synth
