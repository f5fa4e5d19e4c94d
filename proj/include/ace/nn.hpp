#ifndef ACE_NN_HPP
#define ACE_NN_HPP

// Minimal ONNX graph interpreter: parses ModelProto files and evaluates the
// float32 operator subset found in image-classifier featurizer and head
// graphs (convolutions, pooling, normalization, dense layers, shape plumbing).

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ace::nn {

enum class DType { float32, int64 };

struct Tensor {
  std::vector<std::int64_t> shape;
  DType dtype = DType::float32;
  std::vector<float> f;         // float32 payload
  std::vector<std::int64_t> i;  // int64 payload

  static Tensor floats(std::vector<std::int64_t> shape, std::vector<float> values);
  static Tensor ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> values);

  std::int64_t numel() const;
  std::size_t size() const { return dtype == DType::float32 ? f.size() : i.size(); }
};

struct ValueInfo {
  std::string name;
  std::vector<std::int64_t> dims;  // -1 for symbolic or unknown
};

struct Attribute {
  std::int64_t i = 0;
  float f = 0.0f;
  std::string s;
  std::vector<std::int64_t> ints;
  std::vector<float> floats;
  std::shared_ptr<Tensor> t;
};

struct Node {
  std::string op_type;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Attribute> attributes;

  const Attribute* attr(const std::string& key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? nullptr : &it->second;
  }
  std::int64_t attr_int(const std::string& key, std::int64_t fallback) const {
    const Attribute* a = attr(key);
    return a ? a->i : fallback;
  }
  float attr_float(const std::string& key, float fallback) const {
    const Attribute* a = attr(key);
    return a ? a->f : fallback;
  }
  std::vector<std::int64_t> attr_ints(const std::string& key, std::vector<std::int64_t> fallback = {}) const {
    const Attribute* a = attr(key);
    return a ? a->ints : fallback;
  }
};

/// An immutable, loaded inference graph. `run` is const and may be called
/// concurrently.
class Graph {
 public:
  static Graph load(const std::filesystem::path& path);
  static Graph parse(std::string_view bytes);

  const std::vector<ValueInfo>& inputs() const { return inputs_; }
  const std::vector<ValueInfo>& outputs() const { return outputs_; }
  std::int64_t opset() const { return opset_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Evaluates the graph. Returns the requested outputs, or every graph
  /// output when `wanted` is empty.
  std::map<std::string, Tensor> run(const std::map<std::string, Tensor>& feeds,
                                    const std::vector<std::string>& wanted = {}) const;

 private:
  std::vector<Node> nodes_;
  std::map<std::string, Tensor> initializers_;
  std::vector<ValueInfo> inputs_;
  std::vector<ValueInfo> outputs_;
  std::int64_t opset_ = 13;
};

/// Evaluates a single node given its resolved inputs (null for omitted
/// optional inputs). Exposed for operator-level tests.
std::vector<Tensor> evaluate(const Node& node, const std::vector<const Tensor*>& inputs, std::int64_t opset);

}  // namespace ace::nn

#endif  // ACE_NN_HPP
