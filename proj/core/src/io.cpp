// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/io.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "relcurate/error.hpp"

namespace relcurate {

using ojson = nlohmann::ordered_json;

namespace {

// Schema problem inside a record; converted to ParseError with a line number.
struct RecordError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string dump_line(const ojson& j) { return j.dump(-1, ' ', false) + "\n"; }

template <typename Fn>
void for_each_record(const fs::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "record is not an object");
        try {
            fn(j, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        } catch (const RecordError& e) {
            throw ParseError(line_no, e.what());
        }
    }
}

template <typename T, typename Fn>
void save_lines(std::span<const T> items, const fs::path& path, Fn&& to_json) {
    std::string out;
    for (const auto& it : items) out += dump_line(to_json(it));
    write_file_atomic(path, out);
}

const ojson& field(const ojson& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw RecordError(std::string("missing field '") + name + "'");
    return *it;
}

std::vector<double> read_probabilities(const ojson& arr) {
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw RecordError("probability is not a number");
        double p = v.get<double>();
        if (p >= 0.0 && p < kProbabilityFloor) p = kProbabilityFloor;
        out.push_back(p);
    }
    return out;
}

ojson sample_json(const VlitSample& s) {
    ojson j;
    j["sample_id"] = s.sample_id;
    j["image_id"] = s.image_id;
    j["instruction_class"] = std::string(to_string(s.instruction_class));
    j["question"] = s.question;
    j["answer"] = s.answer;
    j["p_visual"] = s.p_visual;
    j["p_direct"] = s.p_direct;
    return j;
}

VlitSample sample_from_json(const ojson& j) {
    VlitSample s;
    s.sample_id = field(j, "sample_id").get<std::string>();
    s.image_id = field(j, "image_id").get<std::string>();
    const auto cls = field(j, "instruction_class").get<std::string>();
    try {
        s.instruction_class = parse_instruction_class(cls);
    } catch (const ConfigError&) {
        throw ValidationError(s.sample_id, "unknown instruction_class '" + cls + "'");
    }
    s.question = field(j, "question").get<TokenSeq>();
    s.answer = field(j, "answer").get<TokenSeq>();
    s.p_visual = read_probabilities(field(j, "p_visual"));
    s.p_direct = read_probabilities(field(j, "p_direct"));
    validate(s);
    return s;
}

}  // namespace

std::string sample_to_line(const VlitSample& sample) { return dump_line(sample_json(sample)); }

VlitSample sample_from_line(std::string_view line, std::size_t line_no) {
    try {
        auto j = ojson::parse(line);
        if (!j.is_object()) throw ParseError(line_no, "record is not an object");
        return sample_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_no, e.what());
    } catch (const RecordError& e) {
        throw ParseError(line_no, e.what());
    }
}

std::vector<VlitSample> load_samples(const fs::path& path) {
    std::vector<VlitSample> out;
    std::unordered_set<std::string> ids;
    for_each_record(path, [&](const ojson& j, std::size_t) {
        auto s = sample_from_json(j);
        if (!ids.insert(s.sample_id).second) {
            throw ValidationError(s.sample_id, "duplicate sample_id");
        }
        out.push_back(std::move(s));
    });
    return out;
}

void save_samples(std::span<const VlitSample> samples, const fs::path& path) {
    save_lines(samples, path, sample_json);
}

std::vector<ScoredSample> load_scored(const fs::path& path) {
    std::vector<ScoredSample> out;
    std::unordered_set<std::string> ids;
    for_each_record(path, [&](const ojson& j, std::size_t) {
        auto s = sample_from_json(j);
        if (!ids.insert(s.sample_id).second) {
            throw ValidationError(s.sample_id, "duplicate sample_id");
        }
        ScoredSample scored;
        scored.s_av = s.p_visual;
        scored.s_a = s.p_direct;
        scored.i2c = field(j, "i2c_score").get<double>();
        scored.sample = std::move(s);
        out.push_back(std::move(scored));
    });
    return out;
}

void save_scored(std::span<const ScoredSample> scored, const fs::path& path) {
    save_lines(scored, path, [](const ScoredSample& s) {
        auto j = sample_json(s.sample);
        j["i2c_score"] = s.i2c;
        return j;
    });
}

std::vector<ImageRef> load_images(const fs::path& path) {
    std::vector<ImageRef> out;
    std::unordered_set<std::string> ids;
    for_each_record(path, [&](const ojson& j, std::size_t) {
        ImageRef img;
        img.image_id = field(j, "image_id").get<std::string>();
        img.features = field(j, "features").get<std::vector<double>>();
        validate(img);
        if (!ids.insert(img.image_id).second) {
            throw ValidationError(img.image_id, "duplicate image_id");
        }
        out.push_back(std::move(img));
    });
    return out;
}

void save_images(std::span<const ImageRef> images, const fs::path& path) {
    save_lines(images, path, [](const ImageRef& img) {
        ojson j;
        j["image_id"] = img.image_id;
        j["features"] = img.features;
        return j;
    });
}

std::vector<DroppedSample> load_dropped(const fs::path& path) {
    std::vector<DroppedSample> out;
    for_each_record(path, [&](const ojson& j, std::size_t line_no) {
        DroppedSample d;
        d.sample_id = field(j, "sample_id").get<std::string>();
        try {
            d.reason = parse_drop_reason(field(j, "reason").get<std::string>());
        } catch (const ConfigError& e) {
            throw ParseError(line_no, e.what());
        }
        out.push_back(std::move(d));
    });
    return out;
}

void save_dropped(std::span<const DroppedSample> dropped, const fs::path& path) {
    save_lines(dropped, path, [](const DroppedSample& d) {
        ojson j;
        j["sample_id"] = d.sample_id;
        j["reason"] = std::string(to_string(d.reason));
        return j;
    });
}

std::vector<PseudoLabelPartition> load_partitions(const fs::path& path) {
    std::vector<PseudoLabelPartition> out;
    for_each_record(path, [&](const ojson& j, std::size_t) {
        PseudoLabelPartition p;
        p.image_id = field(j, "image_id").get<std::string>();
        p.positive = field(j, "positive").get<std::string>();
        p.negatives = field(j, "negatives").get<std::vector<std::string>>();
        p.skipped_for_contrastive = field(j, "skipped_for_contrastive").get<bool>();
        out.push_back(std::move(p));
    });
    return out;
}

void save_partitions(std::span<const PseudoLabelPartition> partitions, const fs::path& path) {
    save_lines(partitions, path, [](const PseudoLabelPartition& p) {
        ojson j;
        j["image_id"] = p.image_id;
        j["positive"] = p.positive;
        j["negatives"] = p.negatives;
        j["skipped_for_contrastive"] = p.skipped_for_contrastive;
        return j;
    });
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace relcurate
