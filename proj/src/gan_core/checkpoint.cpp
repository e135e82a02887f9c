#include <bit>
#include <cstring>
#include <fstream>

#include "octgan/gan.hpp"

namespace octgan::gan {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'O', 'C', 'T', 'G', 'A', 'N', 'C', 'K'};

nlohmann::json describe(const std::vector<ParamRecord>& params) {
    auto arr = nlohmann::json::array();
    for (const auto& p : params) {
        arr.push_back({{"name", p.name}, {"shape", {p.shape.n, p.shape.c, p.shape.h, p.shape.w}}});
    }
    return arr;
}

std::vector<ParamRecord> copy_values(const std::vector<Param*>& params) {
    std::vector<ParamRecord> out;
    for (const auto* p : params) out.push_back({p->name, p->value.shape(), p->value.values()});
    return out;
}

void restore(const std::vector<Param*>& params, const std::vector<ParamRecord>& records, const char* what) {
    if (params.size() != records.size()) {
        throw CheckpointError(std::string(what) + ": checkpoint holds " + std::to_string(records.size()) +
                              " tensors, model expects " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->name != records[i].name || !(params[i]->value.shape() == records[i].shape) ||
            records[i].values.size() != params[i]->value.size()) {
            throw CheckpointError(std::string(what) + ": layout mismatch at " + params[i]->name);
        }
        params[i]->value.values() = records[i].values;
    }
}

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("checkpoint truncated");
    return v;
}

std::vector<ParamRecord> read_block(std::istream& is, const nlohmann::json& layout) {
    std::vector<ParamRecord> out;
    for (const auto& entry : layout) {
        ParamRecord r;
        r.name = entry.at("name").get<std::string>();
        const auto dims = entry.at("shape").get<std::vector<std::size_t>>();
        if (dims.size() != 4) throw CheckpointError("bad tensor shape for " + r.name);
        r.shape = {dims[0], dims[1], dims[2], dims[3]};
        r.values.resize(r.shape.count());
        if (!is.read(reinterpret_cast<char*>(r.values.data()),
                     static_cast<std::streamsize>(r.values.size() * sizeof(double)))) {
            throw CheckpointError("checkpoint truncated in " + r.name);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

Generator Checkpoint::make_generator() const {
    Generator g(generator, seed);
    restore(g.params(), generator_params, "generator");
    return g;
}

Discriminator Checkpoint::make_discriminator() const {
    if (!discriminator) throw CheckpointError("checkpoint has no discriminator");
    Discriminator d(*discriminator, seed + 1);
    restore(d.params(), discriminator_params, "discriminator");
    return d;
}

Checkpoint capture(Generator& g, Discriminator* d, const LossWeights& weights, std::uint64_t seed,
                   nlohmann::json info) {
    Checkpoint ck;
    ck.generator = g.config();
    ck.weights = weights;
    ck.seed = seed;
    ck.info = std::move(info);
    ck.generator_params = copy_values(g.params());
    if (d != nullptr) {
        ck.discriminator = d->config();
        ck.discriminator_params = copy_values(d->params());
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    nlohmann::json head = {{"generator", ck.generator},
                           {"loss_weights", ck.weights},
                           {"seed", ck.seed},
                           {"info", ck.info},
                           {"generator_params", describe(ck.generator_params)}};
    if (ck.discriminator) {
        head["discriminator"] = *ck.discriminator;
        head["discriminator_params"] = describe(ck.discriminator_params);
    }
    const std::string text = head.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write checkpoint " + tmp.string());
        os.write(kMagic, sizeof kMagic);
        put<std::uint32_t>(os, kCheckpointVersion);
        put<std::uint64_t>(os, text.size());
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto* block : {&ck.generator_params, &ck.discriminator_params}) {
            for (const auto& r : *block) {
                os.write(reinterpret_cast<const char*>(r.values.data()),
                         static_cast<std::streamsize>(r.values.size() * sizeof(double)));
            }
        }
        if (!os.flush()) throw Error("failed writing checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw CheckpointError(path.string() + " is not a checkpoint");
    }
    const auto version = get<std::uint32_t>(is);
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto len = get<std::uint64_t>(is);
    if (len > (std::uint64_t{1} << 30)) throw CheckpointError("checkpoint header too large");
    std::string text(len, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw CheckpointError("checkpoint truncated");

    Checkpoint ck;
    nlohmann::json head;
    try {
        head = nlohmann::json::parse(text);
        ck.generator = head.at("generator").get<GeneratorConfig>();
        ck.generator.validate();
        ck.weights = head.at("loss_weights").get<LossWeights>();
        ck.seed = head.at("seed").get<std::uint64_t>();
        ck.info = head.value("info", nlohmann::json::object());
        if (head.contains("discriminator")) {
            ck.discriminator = head.at("discriminator").get<DiscriminatorConfig>();
            ck.discriminator->validate();
        }
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw CheckpointError(std::string("checkpoint holds an invalid configuration: ") + e.what());
    }
    ck.generator_params = read_block(is, head.at("generator_params"));
    if (ck.discriminator) ck.discriminator_params = read_block(is, head.at("discriminator_params"));
    if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint data");
    return ck;
}

}  // namespace octgan::gan
