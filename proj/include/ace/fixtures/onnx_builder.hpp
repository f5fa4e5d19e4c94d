#ifndef ACE_FIXTURES_ONNX_BUILDER_HPP
#define ACE_FIXTURES_ONNX_BUILDER_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace onnx {
class ModelProto;
class NodeProto;
}  // namespace onnx

namespace ace::fixtures {

/// Small helper for writing ONNX models by hand. Dimensions < 0 become the
/// symbolic batch dimension "N".
class OnnxBuilder {
 public:
  explicit OnnxBuilder(const std::string& graph_name, std::int64_t opset = 13);
  ~OnnxBuilder();
  OnnxBuilder(const OnnxBuilder&) = delete;
  OnnxBuilder& operator=(const OnnxBuilder&) = delete;

  void input(const std::string& name, const std::vector<std::int64_t>& dims);
  void output(const std::string& name, const std::vector<std::int64_t>& dims);
  void initializer(const std::string& name, const std::vector<std::int64_t>& dims, const std::vector<float>& values);
  void initializer_i64(const std::string& name, const std::vector<std::int64_t>& dims,
                       const std::vector<std::int64_t>& values);

  class NodeRef {
   public:
    explicit NodeRef(onnx::NodeProto* node) : node_(node) {}
    NodeRef& attr(const std::string& name, std::int64_t value);
    NodeRef& attr(const std::string& name, float value);
    NodeRef& attr(const std::string& name, const std::vector<std::int64_t>& values);
    NodeRef& attr(const std::string& name, const std::string& value);

   private:
    onnx::NodeProto* node_;
  };
  NodeRef node(const std::string& op_type, const std::vector<std::string>& inputs,
               const std::vector<std::string>& outputs);

  std::string serialize() const;

 private:
  std::unique_ptr<onnx::ModelProto> model_;
  int node_count_ = 0;
};

}  // namespace ace::fixtures

#endif  // ACE_FIXTURES_ONNX_BUILDER_HPP
