#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "calguard/data.hpp"
#include "calguard/nets.hpp"

namespace calguard::cli {

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitFail = 2;
constexpr int kExitAbort = 3;
constexpr int kExitIo = 4;
constexpr int kExitUsage = 5;

struct TrainOptions {
  std::vector<std::size_t> hidden{32, 32};
  nets::OptConfig opt;
  bool calibrate = true;
  // Share of the training rows held out for the temperature fit.
  double val_fraction = 0.2;
};

// Trains on `train` minus a seeded validation carve-out, then fits the
// temperature on the carve-out when `calibrate` is set.
nets::ModelParams train_classifier(const data::Dataset& train, const TrainOptions& opt,
                                   std::uint64_t seed);

// A directory resolves to DIR/<default_file>; the schema is read from
// schema.json next to the CSV when present.
data::Dataset load_dataset(const std::string& path, const std::string& default_file = "train.csv");

int dispatch(int argc, char** argv);

}  // namespace calguard::cli
