#include "groupcast/io.hpp"

#include "json.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host byte order");

namespace groupcast::io {

using nlohmann::json;

namespace {

constexpr double kTargetEncodingSmoothing = 10.0;

double json_to_value(const json& v, const std::string& where) {
    if (v.is_null()) return kMissing;
    if (!v.is_number()) throw Error(where + ": expected a number or null");
    return v.get<double>();
}

json value_to_json(double v) {
    if (is_missing(v)) return nullptr;
    return v;
}

std::string role_name(data::Role role) {
    switch (role) {
        case data::Role::target: return "target";
        case data::Role::past_only_covariate: return "past_covariate";
        case data::Role::known_covariate: return "known_covariate";
    }
    return "unknown";
}

struct RawColumn {
    std::string name;
    std::string role;
    std::string dtype;
    std::vector<double> reals;
    std::vector<std::string> categories;
};

data::ForecastTask task_from_json(const json& record, const std::string& where) {
    if (!record.is_object()) throw Error(where + ": task record must be an object");
    for (const auto& key : {"task_id", "freq", "horizon", "columns"})
        if (!record.contains(key)) throw Error(where + ": missing field " + key);

    data::ForecastTask task;
    task.task_id = record["task_id"].get<std::string>();
    task.freq = record["freq"].get<std::string>();
    task.horizon = record["horizon"].get<int>();
    if (task.horizon <= 0) throw Error(where + ": horizon must be positive");

    std::vector<RawColumn> columns;
    for (const auto& col : record["columns"]) {
        RawColumn raw;
        raw.name = col.value("name", "");
        raw.role = col.value("role", "");
        raw.dtype = col.value("dtype", "real");
        if (raw.dtype != "real" && raw.dtype != "categorical")
            throw Error(where + ": column " + raw.name + " has unknown dtype " + raw.dtype);
        if (raw.role != "target" && raw.role != "past_covariate" &&
            raw.role != "known_covariate" && raw.role != "static")
            throw Error(where + ": column " + raw.name + " has unknown role " + raw.role);
        if (raw.role == "target" && raw.dtype == "categorical")
            throw Error(where + ": column " + raw.name + " is categorical but tagged as target");

        const auto& values = col["values"];
        if (!values.is_array()) throw Error(where + ": column " + raw.name + " needs values");
        for (const auto& v : values) {
            if (raw.dtype == "categorical") {
                if (v.is_null())
                    throw Error(where + ": column " + raw.name +
                                " has a null categorical value");
                raw.categories.push_back(v.get<std::string>());
            } else {
                raw.reals.push_back(json_to_value(v, where + ": column " + raw.name));
            }
        }
        columns.push_back(std::move(raw));
    }

    // Every dynamic column must span the same T+H window; static columns
    // carry one value.
    int span = -1;
    for (const auto& col : columns) {
        if (col.role == "static") {
            const size_t n = col.dtype == "real" ? col.reals.size() : col.categories.size();
            if (n != 1)
                throw Error(where + ": static column " + col.name + " must hold one value");
            continue;
        }
        const int n = static_cast<int>(col.dtype == "real" ? col.reals.size()
                                                           : col.categories.size());
        if (span == -1) span = n;
        if (n != span)
            throw Error(where + ": column " + col.name + " length differs from the rest");
    }
    if (span == -1) throw Error(where + ": task has no dynamic columns");
    if (span <= task.horizon) throw Error(where + ": series not longer than its horizon");
    const int t = span - task.horizon;

    std::vector<const RawColumn*> targets;
    for (const auto& col : columns)
        if (col.role == "target") targets.push_back(&col);
    if (targets.empty()) throw Error(where + ": task has no target columns");
    const int dims = static_cast<int>(targets.size());

    task.targets = Matrix(t, dims);
    bool any_truth = false;
    for (int d = 0; d < dims; ++d)
        for (int i = t; i < span; ++i)
            if (!is_missing(targets[static_cast<size_t>(d)]->reals[static_cast<size_t>(i)]))
                any_truth = true;
    if (any_truth) task.ground_truth = Matrix(task.horizon, dims);
    for (int d = 0; d < dims; ++d) {
        const auto& vals = targets[static_cast<size_t>(d)]->reals;
        for (int i = 0; i < t; ++i) task.targets.at(i, d) = vals[static_cast<size_t>(i)];
        if (any_truth)
            for (int i = 0; i < task.horizon; ++i)
                task.ground_truth.at(i, d) = vals[static_cast<size_t>(t + i)];
    }

    // Covariates, in file order. Categorical columns are encoded against the
    // sole target when there is one, ordinally otherwise; static columns
    // broadcast to a constant known covariate.
    std::vector<std::vector<double>> cov_values;
    std::vector<data::Role> cov_roles;
    for (const auto& col : columns) {
        if (col.role == "target") continue;
        std::vector<double> encoded;
        if (col.role == "static") {
            double v;
            if (col.dtype == "real") {
                v = col.reals[0];
            } else if (dims == 1) {
                std::vector<std::string> repeated(static_cast<size_t>(span), col.categories[0]);
                std::vector<double> target_col(static_cast<size_t>(t));
                for (int i = 0; i < t; ++i) target_col[static_cast<size_t>(i)] =
                    task.targets.at(i, 0);
                v = data::encode_categorical_target(repeated, target_col,
                                                    kTargetEncodingSmoothing)
                        .first[0];
            } else {
                v = data::encode_categorical_ordinal(col.categories).first[0];
            }
            encoded.assign(static_cast<size_t>(span), v);
            cov_roles.push_back(data::Role::known_covariate);
        } else {
            if (col.dtype == "real") {
                encoded = col.reals;
            } else if (dims == 1) {
                std::vector<double> target_col(static_cast<size_t>(t));
                for (int i = 0; i < t; ++i) target_col[static_cast<size_t>(i)] =
                    task.targets.at(i, 0);
                encoded = data::encode_categorical_target(col.categories, target_col,
                                                          kTargetEncodingSmoothing)
                              .first;
            } else {
                encoded = data::encode_categorical_ordinal(col.categories).first;
            }
            cov_roles.push_back(col.role == "known_covariate" ? data::Role::known_covariate
                                                              : data::Role::past_only_covariate);
        }
        cov_values.push_back(std::move(encoded));
    }

    if (!cov_values.empty()) {
        task.covariates = Matrix(span, static_cast<int>(cov_values.size()));
        for (size_t m = 0; m < cov_values.size(); ++m)
            for (int i = 0; i < span; ++i)
                task.covariates.at(i, static_cast<int>(m)) = cov_values[m][static_cast<size_t>(i)];
        task.covariate_roles = std::move(cov_roles);
    }
    return task;
}

}  // namespace

std::vector<data::ForecastTask> load_tasks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset " + path);
    std::vector<data::ForecastTask> tasks;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(where + ": " + e.what());
        }
        tasks.push_back(task_from_json(record, where));
    }
    return tasks;
}

void save_tasks(const std::vector<data::ForecastTask>& tasks, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    for (const auto& task : tasks) {
        json record;
        record["task_id"] = task.task_id;
        record["freq"] = task.freq;
        record["horizon"] = task.horizon;
        json columns = json::array();
        const int t = task.targets.rows();
        for (int d = 0; d < task.targets.cols(); ++d) {
            json col;
            col["name"] = "target_" + std::to_string(d);
            col["role"] = "target";
            col["dtype"] = "real";
            json values = json::array();
            for (int i = 0; i < t; ++i) values.push_back(value_to_json(task.targets.at(i, d)));
            for (int i = 0; i < task.horizon; ++i)
                values.push_back(task.ground_truth.empty()
                                     ? json(nullptr)
                                     : value_to_json(task.ground_truth.at(i, d)));
            col["values"] = std::move(values);
            columns.push_back(std::move(col));
        }
        for (int m = 0; m < task.covariates.cols(); ++m) {
            json col;
            col["name"] = "covariate_" + std::to_string(m);
            col["role"] = role_name(task.covariate_roles[static_cast<size_t>(m)]);
            col["dtype"] = "real";
            json values = json::array();
            for (int i = 0; i < task.covariates.rows(); ++i)
                values.push_back(value_to_json(task.covariates.at(i, m)));
            col["values"] = std::move(values);
            columns.push_back(std::move(col));
        }
        record["columns"] = std::move(columns);
        out << record.dump() << '\n';
    }
}

void save_forecasts(const std::vector<infer::QuantileForecast>& forecasts,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    for (const auto& fc : forecasts) {
        json record;
        record["task_id"] = fc.task_id;
        record["levels"] = fc.levels;
        json steps = json::array();
        for (int s = 0; s < fc.horizon; ++s) {
            json dims = json::array();
            for (int d = 0; d < fc.dims; ++d) {
                json levels = json::array();
                for (size_t q = 0; q < fc.levels.size(); ++q)
                    levels.push_back(fc.at(s, d, static_cast<int>(q)));
                dims.push_back(std::move(levels));
            }
            steps.push_back(std::move(dims));
        }
        record["forecast"] = std::move(steps);
        out << record.dump() << '\n';
    }
}

std::vector<infer::QuantileForecast> load_forecasts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open forecasts " + path);
    std::vector<infer::QuantileForecast> forecasts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(where + ": " + e.what());
        }
        infer::QuantileForecast fc;
        fc.task_id = record.value("task_id", "");
        fc.levels = record["levels"].get<std::vector<double>>();
        const auto& steps = record["forecast"];
        fc.horizon = static_cast<int>(steps.size());
        fc.dims = fc.horizon > 0 ? static_cast<int>(steps[0].size()) : 0;
        fc.values.reserve(static_cast<size_t>(fc.horizon) * fc.dims * fc.levels.size());
        for (const auto& dims : steps) {
            if (static_cast<int>(dims.size()) != fc.dims)
                throw Error(where + ": ragged forecast dimensions");
            for (const auto& levels : dims) {
                if (levels.size() != fc.levels.size())
                    throw Error(where + ": ragged forecast levels");
                for (const auto& v : levels) fc.values.push_back(v.get<double>());
            }
        }
        forecasts.push_back(std::move(fc));
    }
    return forecasts;
}

namespace {

constexpr char kMagic[4] = {'G', 'C', 'P', 'T'};
constexpr uint32_t kVersion = 1;

json config_to_json(const model::ModelConfig& config) {
    return {
        {"patch_len", config.patch_len},
        {"d_model", config.d_model},
        {"n_blocks", config.n_blocks},
        {"n_heads", config.n_heads},
        {"max_context", config.max_context},
        {"max_output_patches", config.max_output_patches},
        {"rope_base", config.rope_base},
        {"quantile_levels", config.quantile_levels},
    };
}

model::ModelConfig config_from_json(const json& j) {
    model::ModelConfig config;
    config.patch_len = j.at("patch_len").get<int>();
    config.d_model = j.at("d_model").get<int>();
    config.n_blocks = j.at("n_blocks").get<int>();
    config.n_heads = j.at("n_heads").get<int>();
    config.max_context = j.at("max_context").get<int>();
    config.max_output_patches = j.at("max_output_patches").get<int>();
    config.rope_base = j.at("rope_base").get<double>();
    config.quantile_levels = j.at("quantile_levels").get<std::vector<double>>();
    config.validate();
    return config;
}

void append_array(std::ofstream& out, const std::vector<double>& values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const model::ModelConfig& config,
                     const model::Parameters& params,
                     const training::OptimizerState* optimizer, const int* next_step) {
    json header;
    header["config"] = config_to_json(config);

    json manifest = json::array();
    int64_t offset = 0;
    auto describe = [&](const std::string& name, const nn::Shape& shape, size_t count) {
        manifest.push_back({{"name", name}, {"shape", shape}, {"offset", offset}});
        offset += static_cast<int64_t>(count);
    };
    for (const auto& name : params.names) {
        const auto& tensor = params.at(name);
        describe(name, tensor.shape(), tensor.values().size());
    }
    if (optimizer) {
        header["optimizer"] = {{"step", optimizer->step}};
        for (const auto& name : params.names) {
            const auto shape = params.at(name).shape();
            const auto mit = optimizer->m.find(name);
            if (mit == optimizer->m.end()) continue;
            describe("opt.m." + name, shape, mit->second.size());
            describe("opt.v." + name, shape, optimizer->v.at(name).size());
        }
    }
    if (next_step) header["training"] = {{"next_step", *next_step}};
    header["params"] = std::move(manifest);

    const std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    const uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    for (const auto& name : params.names) append_array(out, params.at(name).values());
    if (optimizer)
        for (const auto& name : params.names) {
            const auto mit = optimizer->m.find(name);
            if (mit == optimizer->m.end()) continue;
            append_array(out, mit->second);
            append_array(out, optimizer->v.at(name));
        }
    if (!out) throw Error("failed to write checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path);

    char magic[4];
    uint32_t version = 0;
    uint64_t header_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error(path + " is not a checkpoint file");
    if (version != kVersion)
        throw Error(path + " has unsupported checkpoint version " + std::to_string(version));

    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw Error(path + " is truncated");
    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw Error(path + ": bad checkpoint header: " + e.what());
    }

    Checkpoint ckpt;
    ckpt.config = config_from_json(header.at("config"));

    // A fresh parameter set from the stored config supplies the expected
    // names and shapes; the payload must match it exactly.
    ckpt.params = model::init_parameters(ckpt.config, 0);
    const std::streampos payload_start = in.tellg();

    auto read_array = [&](int64_t offset, std::vector<double>& dst) {
        in.seekg(payload_start + static_cast<std::streamoff>(offset * sizeof(double)));
        in.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(dst.size() * sizeof(double)));
        if (!in) throw Error(path + " is truncated");
    };

    bool has_optimizer = header.contains("optimizer");
    if (has_optimizer) {
        ckpt.optimizer.emplace();
        ckpt.optimizer->step = header["optimizer"].at("step").get<int>();
    }
    if (header.contains("training"))
        ckpt.next_step = header["training"].at("next_step").get<int>();

    std::set<std::string> seen;
    for (const auto& entry : header.at("params")) {
        const std::string name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<nn::Shape>();
        const int64_t offset = entry.at("offset").get<int64_t>();
        seen.insert(name);

        std::string base = name;
        std::vector<double>* dst = nullptr;
        if (name.rfind("opt.m.", 0) == 0 || name.rfind("opt.v.", 0) == 0) {
            if (!has_optimizer) throw Error(path + " has moment arrays but no optimizer record");
            base = name.substr(6);
            auto& store = name[4] == 'm' ? ckpt.optimizer->m : ckpt.optimizer->v;
            dst = &store[base];
            dst->resize(static_cast<size_t>(nn::numel(shape)));
        }
        if (!ckpt.params.by_name.count(base))
            throw Error(path + " names unknown parameter " + base);
        if (ckpt.params.at(base).shape() != shape)
            throw Error(path + " has a shape mismatch for " + base);
        if (!dst) dst = &ckpt.params.at(name).values();
        read_array(offset, *dst);
    }
    for (const auto& name : ckpt.params.names)
        if (!seen.count(name)) throw Error(path + " is missing parameter " + name);
    return ckpt;
}

}  // namespace groupcast::io
