#include "ace/fixtures/onnx_builder.hpp"

#include "onnx.pb.h"

namespace ace::fixtures {

namespace {

void set_value_info(onnx::ValueInfoProto* vi, const std::string& name, const std::vector<std::int64_t>& dims) {
  vi->set_name(name);
  auto* tensor = vi->mutable_type()->mutable_tensor_type();
  tensor->set_elem_type(onnx::TensorProto::FLOAT);
  auto* shape = tensor->mutable_shape();
  for (auto d : dims) {
    auto* dim = shape->add_dim();
    if (d < 0) dim->set_dim_param("N");
    else dim->set_dim_value(d);
  }
}

}  // namespace

OnnxBuilder::OnnxBuilder(const std::string& graph_name, std::int64_t opset)
    : model_(std::make_unique<onnx::ModelProto>()) {
  model_->set_ir_version(7);
  model_->set_producer_name("ace-fixtures");
  auto* op = model_->add_opset_import();
  op->set_domain("");
  op->set_version(opset);
  model_->mutable_graph()->set_name(graph_name);
}

OnnxBuilder::~OnnxBuilder() = default;

void OnnxBuilder::input(const std::string& name, const std::vector<std::int64_t>& dims) {
  set_value_info(model_->mutable_graph()->add_input(), name, dims);
}

void OnnxBuilder::output(const std::string& name, const std::vector<std::int64_t>& dims) {
  set_value_info(model_->mutable_graph()->add_output(), name, dims);
}

void OnnxBuilder::initializer(const std::string& name, const std::vector<std::int64_t>& dims,
                              const std::vector<float>& values) {
  auto* t = model_->mutable_graph()->add_initializer();
  t->set_name(name);
  t->set_data_type(onnx::TensorProto::FLOAT);
  for (auto d : dims) t->add_dims(d);
  for (float v : values) t->add_float_data(v);
}

void OnnxBuilder::initializer_i64(const std::string& name, const std::vector<std::int64_t>& dims,
                                  const std::vector<std::int64_t>& values) {
  auto* t = model_->mutable_graph()->add_initializer();
  t->set_name(name);
  t->set_data_type(onnx::TensorProto::INT64);
  for (auto d : dims) t->add_dims(d);
  for (auto v : values) t->add_int64_data(v);
}

OnnxBuilder::NodeRef OnnxBuilder::node(const std::string& op_type, const std::vector<std::string>& inputs,
                                       const std::vector<std::string>& outputs) {
  auto* n = model_->mutable_graph()->add_node();
  n->set_op_type(op_type);
  n->set_name(op_type + "_" + std::to_string(node_count_++));
  for (const auto& i : inputs) n->add_input(i);
  for (const auto& o : outputs) n->add_output(o);
  return NodeRef(n);
}

OnnxBuilder::NodeRef& OnnxBuilder::NodeRef::attr(const std::string& name, std::int64_t value) {
  auto* a = node_->add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto::INT);
  a->set_i(value);
  return *this;
}

OnnxBuilder::NodeRef& OnnxBuilder::NodeRef::attr(const std::string& name, float value) {
  auto* a = node_->add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto::FLOAT);
  a->set_f(value);
  return *this;
}

OnnxBuilder::NodeRef& OnnxBuilder::NodeRef::attr(const std::string& name, const std::vector<std::int64_t>& values) {
  auto* a = node_->add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto::INTS);
  for (auto v : values) a->add_ints(v);
  return *this;
}

OnnxBuilder::NodeRef& OnnxBuilder::NodeRef::attr(const std::string& name, const std::string& value) {
  auto* a = node_->add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto::STRING);
  a->set_s(value);
  return *this;
}

std::string OnnxBuilder::serialize() const { return model_->SerializeAsString(); }

}  // namespace ace::fixtures
