#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gwp/bekk.hpp"
#include "gwp/data.hpp"
#include "gwp/inference.hpp"
#include "gwp/prediction.hpp"

namespace gwp {

enum class DatasetKind { Periodic2d, FromEmpirical, Csv };
enum class ModelType { Gwp, Bekk };
enum class TimingMode { Wall, Zero };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::Periodic2d;
    PeriodicPathParams periodic;
    std::string csv_path;       // FromEmpirical and Csv
    int window = 100;           // FromEmpirical
    CsvOptions csv_options;
};

struct ModelConfig {
    std::string name;
    ModelType type = ModelType::Gwp;
    KernelSpec kernel;
    SamplerConfig sampler;
    ForecastConfig forecast;
    BekkFitConfig bekk;
    bool quantiles = true;  // per-state quantile bands (Gwp only)
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetConfig dataset;
    std::vector<ModelConfig> models;
    int n_train = 200;
    int n_forecast = 91;
    std::vector<std::string> metrics = {"mse_historical", "mse_forecast", "loglik_forecast"};
    LatentEstimate latent = LatentEstimate::Draw;
    TimingMode timing = TimingMode::Wall;
    int dense_grid = 0;  // extra points between observed inputs (periodic2d only)
    std::string output_dir = "experiment_out";
    std::uint64_t seed = 0;
    bool verbose = false;

    void validate() const;
};

struct ResultRow {
    std::string dataset;
    std::string model;
    std::optional<double> mse_historical;
    std::optional<double> mse_forecast;
    std::optional<double> loglik_forecast;
    double seconds = 0.0;
    std::string status = "ok";
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::string to_csv() const;
    void save(const std::string& path) const;
};

/// Flat key = value config with [experiment], [dataset] and [model <name>] sections.
/// Unknown keys and malformed lines raise ParseError with the line number.
ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config_text(const std::string& text,
                                              const std::string& origin = "<string>");

/// Runs every model on the dataset: historical fit on the evaluated series, separate
/// training-window fit plus rolling one-step forecasts, metrics against the ground
/// truth (synthetic) or the realized proxy (CSV data). Per-model failures are caught
/// and recorded in the row status; the run continues. Writes result_table.csv,
/// returns/truth CSVs, per-model paths and plot-ready overlays into output_dir.
ResultTable run_experiment(const ExperimentConfig& config);

}  // namespace gwp
