#ifndef PERSPECTRA_EMBEDDING_HPP
#define PERSPECTRA_EMBEDDING_HPP

#include <functional>
#include <string>
#include <vector>

namespace perspectra {

// Per-token embedding vectors for one text, aligned to the kit tokenizer.
struct TokenEmbeddings {
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> vectors;
};

// Anything that can turn a text into per-token vectors: the llmio endpoint
// client in production, deterministic stand-ins in tests.
using TokenEmbedder = std::function<TokenEmbeddings(const std::string&)>;

}  // namespace perspectra

#endif
