#include "flexner/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace flexner {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'F', 'L', 'X', 'N', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

json spec_json(const SubNetworkSpec& s) {
  return json{{"char_encoder", char_encoder_name(s.char_encoder)},
              {"word_encoder", word_encoder_name(s.word_encoder)},
              {"char_dim", s.char_dim},
              {"char_hidden_dim", s.char_hidden_dim},
              {"char_filters", s.char_filters},
              {"char_kernel_width", s.char_kernel_width},
              {"word_dim", s.word_dim},
              {"hidden_dim", s.hidden_dim},
              {"conv_filters", s.conv_filters},
              {"conv_kernel_width", s.conv_kernel_width},
              {"conv_layers", s.conv_layers},
              {"conv_activation", activation_name(s.conv_activation)},
              {"dropout", s.dropout}};
}

SubNetworkSpec spec_from_json(const json& j) {
  SubNetworkSpec s;
  s.char_encoder = parse_char_encoder(j.at("char_encoder").get<std::string>());
  s.word_encoder = parse_word_encoder(j.at("word_encoder").get<std::string>());
  s.char_dim = j.at("char_dim").get<int>();
  s.char_hidden_dim = j.at("char_hidden_dim").get<int>();
  s.char_filters = j.at("char_filters").get<int>();
  s.char_kernel_width = j.at("char_kernel_width").get<int>();
  s.word_dim = j.at("word_dim").get<int>();
  s.hidden_dim = j.at("hidden_dim").get<int>();
  s.conv_filters = j.at("conv_filters").get<int>();
  s.conv_kernel_width = j.at("conv_kernel_width").get<int>();
  s.conv_layers = j.at("conv_layers").get<int>();
  s.conv_activation = parse_activation(j.at("conv_activation").get<std::string>());
  s.dropout = j.at("dropout").get<double>();
  return s;
}

}  // namespace

std::string spec_to_string(const SubNetworkSpec& spec) { return spec_json(spec).dump(); }

void save_checkpoint(const std::string& path, const BilateralModel& model,
                     const std::map<std::string, std::string>& metadata) {
  const auto& cfg = model.config();
  json header;
  header["format"] = 1;
  header["config"] = {{"left", spec_json(cfg.left)},
                      {"right", spec_json(cfg.right)},
                      {"shared_embeddings", cfg.shared_embeddings},
                      {"labelset", cfg.labelset},
                      {"pairwise_emissions", cfg.pairwise_emissions},
                      {"constrained_transitions", cfg.constrained_transitions}};
  header["words"] = model.vocab().words.tokens();
  header["chars"] = model.vocab().chars.tokens();
  header["inference_side"] = side_name(model.inference_side());
  header["metadata"] = metadata;
  json tensors = json::array();
  for (const auto& p : model.params()) {
    tensors.push_back({{"name", p.name},
                       {"group", group_name(p.group)},
                       {"rows", p.value.rows()},
                       {"cols", p.value.cols()}});
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t length = text.size();
    out.write(reinterpret_cast<const char*>(&length), sizeof(length));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : model.params()) {
      out.write(reinterpret_cast<const char*>(p.value.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!out) throw Error("failed writing checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error("cannot move checkpoint into place at '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error("'" + path + "' is not a checkpoint");
  }
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error("checkpoint header truncated");

  json header;
  try {
    header = json::parse(text);
    const json& c = header.at("config");
    BilateralConfig cfg;
    cfg.left = spec_from_json(c.at("left"));
    cfg.right = spec_from_json(c.at("right"));
    cfg.shared_embeddings = c.at("shared_embeddings").get<bool>();
    cfg.labelset = c.at("labelset").get<std::vector<std::string>>();
    cfg.pairwise_emissions = c.at("pairwise_emissions").get<bool>();
    cfg.constrained_transitions = c.at("constrained_transitions").get<bool>();

    Vocabularies vocab;
    const auto words = header.at("words").get<std::vector<std::string>>();
    const auto chars = header.at("chars").get<std::vector<std::string>>();
    for (std::size_t i = 2; i < words.size(); ++i) vocab.words.add(words[i]);
    for (std::size_t i = 2; i < chars.size(); ++i) vocab.chars.add(chars[i]);

    Checkpoint out{BilateralModel(std::move(cfg), std::move(vocab)), {}};
    out.model.set_inference_side(parse_side(header.at("inference_side").get<std::string>()));
    out.metadata = header.at("metadata").get<std::map<std::string, std::string>>();

    const json& tensors = header.at("tensors");
    auto& store = out.model.params();
    if (tensors.size() != store.size()) throw Error("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < store.size(); ++i) {
      const json& t = tensors[i];
      Parameter& p = store[i];
      if (t.at("name").get<std::string>() != p.name ||
          t.at("rows").get<Eigen::Index>() != p.value.rows() ||
          t.at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw Error("checkpoint tensor '" + t.at("name").get<std::string>() +
                    "' does not match the model layout");
      }
      in.read(reinterpret_cast<char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
      if (!in) throw Error("checkpoint tensor data truncated");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed checkpoint header in '" + path + "': " + e.what());
  }
}

}  // namespace flexner
