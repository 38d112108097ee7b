#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "wdt/trainer.hpp"

namespace wdt {

// Versioned checkpoint container: config echo, flat weight table, optimizer
// state and RNG state. Round-trips bit-exactly.
struct Checkpoint {
    DenoiserParams params;
    AdamState adam;
    std::string rng_state;
    int epoch = 0;
    double val_metric = 0.0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wdt
