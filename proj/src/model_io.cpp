#include "phevdemand/model_io.hpp"

#include "phevdemand/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace phevdemand::io {

using nlohmann::json;

namespace {

json kernel_to_json(const svr::KernelSpec& kernel) {
    json j;
    j["type"] = kernel.name();
    if (const auto* r = std::get_if<svr::RbfKernel>(&kernel.variant())) {
        j["gamma"] = r->gamma;
    } else if (const auto* p = std::get_if<svr::PolynomialKernel>(&kernel.variant())) {
        j["degree"] = p->degree;
        j["gamma"] = p->gamma;
        j["coef0"] = p->coef0;
    }
    return j;
}

svr::KernelSpec kernel_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "rbf") {
        return svr::KernelSpec::rbf(j.at("gamma").get<double>());
    }
    if (type == "polynomial") {
        return svr::KernelSpec::polynomial(j.at("degree").get<int>(), j.at("gamma").get<double>(),
                                           j.at("coef0").get<double>());
    }
    if (type == "linear") {
        return svr::KernelSpec::linear();
    }
    throw ParseError("unknown kernel type '" + type + "'", 0);
}

json range_to_json(const data::MinMax& r) {
    return json{{"min", r.min}, {"max", r.max}};
}

data::MinMax range_from_json(const json& j) {
    return {j.at("min").get<double>(), j.at("max").get<double>()};
}

}  // namespace

std::string model_to_json(const StoredModel& stored) {
    const auto& m = stored.model;
    json doc;
    doc["version"] = kModelFormatVersion;
    if (!stored.config_hash.empty()) {
        doc["config_hash"] = stored.config_hash;
    }
    doc["kernel"] = kernel_to_json(m.kernel);
    json rows = json::array();
    for (std::size_t r = 0; r < m.support_inputs.rows(); ++r) {
        const auto row = m.support_inputs.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    doc["support_inputs"] = rows;
    doc["dimension"] = m.support_inputs.cols();
    doc["dual_coefs"] = m.dual_coefs;
    doc["bias"] = m.bias;
    doc["epsilon"] = m.epsilon;
    if (stored.scaler) {
        json inputs = json::array();
        for (const auto& r : stored.scaler->inputs) {
            inputs.push_back(range_to_json(r));
        }
        doc["scaler"] = {{"inputs", inputs}, {"target", range_to_json(stored.scaler->target)}};
    } else {
        doc["scaler"] = nullptr;
    }
    if (stored.feature_map) {
        doc["feature_map"] = std::string(data::to_string(*stored.feature_map));
    }
    return doc.dump(2) + "\n";
}

StoredModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what(), 0);
    }
    try {
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw ParseError("unsupported model format version " + std::to_string(version), 0);
        }
        StoredModel out;
        out.model.kernel = kernel_from_json(doc.at("kernel"));
        const std::size_t dim = doc.at("dimension").get<std::size_t>();
        out.model.support_inputs = svr::DenseMatrix(0, dim);
        for (const auto& row : doc.at("support_inputs")) {
            out.model.support_inputs.append_row(row.get<std::vector<double>>());
        }
        out.model.dual_coefs = doc.at("dual_coefs").get<std::vector<double>>();
        if (out.model.dual_coefs.size() != out.model.support_inputs.rows()) {
            throw ParseError("dual_coefs and support_inputs differ in length", 0);
        }
        out.model.bias = doc.at("bias").get<double>();
        out.model.epsilon = doc.at("epsilon").get<double>();
        if (const auto& s = doc.at("scaler"); !s.is_null()) {
            data::Scaler scaler;
            for (const auto& r : s.at("inputs")) {
                scaler.inputs.push_back(range_from_json(r));
            }
            scaler.target = range_from_json(s.at("target"));
            out.scaler = scaler;
        }
        if (doc.contains("feature_map")) {
            out.feature_map = data::parse_feature_map(doc["feature_map"].get<std::string>());
        }
        if (doc.contains("config_hash")) {
            out.config_hash = doc["config_hash"].get<std::string>();
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what(), 0);
    } catch (const ShapeError& e) {
        throw ParseError(std::string("malformed model file: ") + e.what(), 0);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("malformed model file: ") + e.what(), 0);
    }
}

void save_model(const std::string& path, const StoredModel& stored) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write model file '" + path + "'");
    }
    out << model_to_json(stored);
}

StoredModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open model file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace phevdemand::io
