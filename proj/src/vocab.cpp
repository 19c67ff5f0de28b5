#include "seea/vocab.hpp"

namespace seea {

namespace {

Vocabulary build_standard() {
  Vocabulary v;
  // 64 tokens: specials, verbs, connectives, observation words, receptacle
  // names, object names.
  const char* words[] = {
      "<bos>", "<eos>", "<sep>",
      // verbs
      "go", "take", "put", "open", "close",
      // connectives / task words
      "to", "in", "the", "a", "your", "task", "is", "and", "from", "on",
      // observation words
      "you", "arrive", "at", "see", "nothing", "happens", "closed", "hold",
      "won", "time", "up", "now", "empty", "it", "here", "look", "move",
      "back", "out", "done", "over", "not", "yet", "this", "that", "wait",
      "room", "house", "floor", "door", "stop", "left",
      // receptacles (last three openable)
      "shelf", "table", "counter", "desk", "bed", "cabinet", "drawer", "box",
      // objects
      "apple", "book", "mug", "key", "soap", "towel"};
  for (const char* w : words) {
    v.index[w] = static_cast<TokenId>(v.tokens.size());
    v.tokens.emplace_back(w);
  }
  v.bos = v.index.at("<bos>");
  v.eos = v.index.at("<eos>");
  v.sep = v.index.at("<sep>");
  return v;
}

}  // namespace

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary v = build_standard();
  return v;
}

}  // namespace seea
