#include "flexner/embeddings.hpp"

#include <fstream>
#include <sstream>

#include "flexner/corpus.hpp"

namespace flexner {

int PretrainedEmbeddings::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

PretrainedEmbeddings read_embeddings(std::istream& in) {
  PretrainedEmbeddings out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    std::string v;
    while (fields >> v) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw ParseError(line_no, "embedding value '" + v + "' is not a number");
      }
    }
    if (line_no == 1 && values.size() == 1 && token.find_first_not_of("0123456789") == std::string::npos) {
      continue;
    }
    if (values.empty()) throw ParseError(line_no, "embedding row has no values");
    if (out.dim == 0) out.dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != out.dim) {
      throw ParseError(line_no, "expected " + std::to_string(out.dim) + " values, found " +
                                    std::to_string(values.size()));
    }
    if (out.index_.count(token)) continue;
    out.index_.emplace(token, static_cast<int>(out.tokens.size()));
    out.tokens.push_back(token);
    rows.push_back(std::move(values));
  }
  out.vectors = Mat(static_cast<Eigen::Index>(rows.size()), out.dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < out.dim; ++c) out.vectors(static_cast<Eigen::Index>(r), c) = rows[r][c];
  }
  return out;
}

PretrainedEmbeddings read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file '" + path + "'");
  return read_embeddings(in);
}

void extend_vocabulary(Vocabulary& vocab, const PretrainedEmbeddings& embeddings) {
  for (const auto& t : embeddings.tokens) vocab.add(t);
}

std::size_t load_pretrained(ParameterStore& store, std::size_t table, const Vocabulary& vocab,
                            const PretrainedEmbeddings& embeddings) {
  Mat& E = store.value(table);
  if (E.cols() != embeddings.dim) {
    throw Error("embedding dimension " + std::to_string(embeddings.dim) +
                " does not match word_dim " + std::to_string(E.cols()));
  }
  std::size_t copied = 0;
  for (std::size_t i = 2; i < vocab.size(); ++i) {
    int row = embeddings.find(vocab.token(static_cast<int>(i)));
    if (row < 0) row = embeddings.find(ascii_lower(vocab.token(static_cast<int>(i))));
    if (row < 0) continue;
    E.row(static_cast<Eigen::Index>(i)) = embeddings.vectors.row(row);
    ++copied;
  }
  return copied;
}

}  // namespace flexner
