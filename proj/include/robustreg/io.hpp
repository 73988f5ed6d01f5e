#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "robustreg/adaptive.hpp"
#include "robustreg/datagen.hpp"
#include "robustreg/model.hpp"

namespace robustreg {

// Dataset files. CSV columns: y, x_1..x_p, corrupted. The binary format adds
// a version header and carries the ground-truth parameter when present.
void write_dataset_csv(const std::string& path, const LabeledDataset& data);
LabeledDataset read_dataset_csv(const std::string& path);
void write_dataset_binary(const std::string& path, const LabeledDataset& data);
LabeledDataset read_dataset_binary(const std::string& path);

// Plain-text "key = value" configuration document.
struct KeyValueConfig {
    std::map<std::string, std::string> values;

    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_text(const std::string& text);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int_or(const std::string& key, int fallback) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_list_or(const std::string& key, std::vector<double> fallback) const;

    std::uint64_t content_hash() const;  // FNV-1a over canonicalized entries
};

// Fully resolved experiment configuration.
struct ExperimentConfig {
    ProblemDims dims;
    DistributionSpec dist;
    ConstantsProfile consts;
    SpectralInputs spectral;
    ContaminationStrategy attack;
    Vec b_star;
    FitParams fit;
    double zeta = 1.0;   // noise scale driving r1 in fixed-r1 mode
    double L = 0;        // 0: use the generator law's constant
    double lepski_zeta0 = 16.0;
    double lepski_gamma = 0.5;
    std::uint64_t seed = 1;
    std::uint64_t config_hash = 0;

    static ExperimentConfig from_kv(const KeyValueConfig& kv);
    static ExperimentConfig from_file(const std::string& path);
};

void write_fit_report(const std::string& path, const FitResult& fit, std::uint64_t seed,
                      std::uint64_t config_hash);
void write_bhat_csv(const std::string& path, const Vec& b_hat);
void write_lepski_report(const std::string& path, const AdaptiveResult& res, std::uint64_t seed,
                         std::uint64_t config_hash);

// Debug dump of a recorded weight-update run: per-round margin proxy
// sqrt(<w, tau>) and weight entropy. Requires MwParams::record_history.
void write_mw_trace(const std::string& path, const MwTrace& trace);

}  // namespace robustreg
