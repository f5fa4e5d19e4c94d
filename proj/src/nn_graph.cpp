#include "ace/errors.hpp"
#include "ace/fileio.hpp"
#include "ace/nn.hpp"

#include "onnx.pb.h"

#include <cstring>
#include <set>

namespace ace::nn {

Tensor Tensor::floats(std::vector<std::int64_t> shape, std::vector<float> values) {
  Tensor t;
  t.shape = std::move(shape);
  t.dtype = DType::float32;
  t.f = std::move(values);
  return t;
}

Tensor Tensor::ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> values) {
  Tensor t;
  t.shape = std::move(shape);
  t.dtype = DType::int64;
  t.i = std::move(values);
  return t;
}

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

template <typename T>
std::vector<T> unpack_raw(const std::string& raw) {
  std::vector<T> out(raw.size() / sizeof(T));
  std::memcpy(out.data(), raw.data(), out.size() * sizeof(T));
  return out;
}

Tensor convert(const ::onnx::TensorProto& proto) {
  Tensor t;
  t.shape.assign(proto.dims().begin(), proto.dims().end());
  const std::int64_t n = t.numel();
  switch (proto.data_type()) {
    case ::onnx::TensorProto::FLOAT:
      t.dtype = DType::float32;
      if (proto.has_raw_data())
        t.f = unpack_raw<float>(proto.raw_data());
      else
        t.f.assign(proto.float_data().begin(), proto.float_data().end());
      break;
    case ::onnx::TensorProto::DOUBLE: {
      t.dtype = DType::float32;
      std::vector<double> d = proto.has_raw_data() ? unpack_raw<double>(proto.raw_data())
                                                   : std::vector<double>(proto.double_data().begin(),
                                                                         proto.double_data().end());
      t.f.assign(d.begin(), d.end());
      break;
    }
    case ::onnx::TensorProto::INT64:
      t.dtype = DType::int64;
      if (proto.has_raw_data())
        t.i = unpack_raw<std::int64_t>(proto.raw_data());
      else
        t.i.assign(proto.int64_data().begin(), proto.int64_data().end());
      break;
    case ::onnx::TensorProto::INT32: {
      t.dtype = DType::int64;
      std::vector<std::int32_t> d = proto.has_raw_data() ? unpack_raw<std::int32_t>(proto.raw_data())
                                                         : std::vector<std::int32_t>(proto.int32_data().begin(),
                                                                                     proto.int32_data().end());
      t.i.assign(d.begin(), d.end());
      break;
    }
    default:
      fail(ErrorKind::model_format, "unsupported tensor data type " + std::to_string(proto.data_type()) +
                                        " for tensor '" + proto.name() + "'");
  }
  if (std::int64_t(t.size()) != n)
    fail(ErrorKind::model_format, "tensor '" + proto.name() + "' payload does not match its dims");
  return t;
}

ValueInfo convert(const ::onnx::ValueInfoProto& proto) {
  ValueInfo info;
  info.name = proto.name();
  if (proto.has_type() && proto.type().has_tensor_type() && proto.type().tensor_type().has_shape())
    for (const auto& d : proto.type().tensor_type().shape().dim())
      info.dims.push_back(d.has_dim_value() ? d.dim_value() : -1);
  return info;
}

}  // namespace

Graph Graph::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::not_found, "missing graph file " + path.string());
  return parse(read_file(path));
}

Graph Graph::parse(std::string_view bytes) {
  ::onnx::ModelProto model;
  if (!model.ParseFromArray(bytes.data(), int(bytes.size())))
    fail(ErrorKind::model_format, "not a valid ONNX model");
  Graph g;
  for (const auto& op : model.opset_import())
    if (op.domain().empty() || op.domain() == "ai.onnx") g.opset_ = op.version();

  const auto& graph = model.graph();
  for (const auto& init : graph.initializer()) g.initializers_[init.name()] = convert(init);
  for (const auto& in : graph.input())
    if (!g.initializers_.count(in.name())) g.inputs_.push_back(convert(in));
  for (const auto& out : graph.output()) g.outputs_.push_back(convert(out));

  for (const auto& np : graph.node()) {
    if (!np.domain().empty() && np.domain() != "ai.onnx")
      fail(ErrorKind::model_format, "unsupported operator domain '" + np.domain() + "'");
    Node node;
    node.op_type = np.op_type();
    node.name = np.name();
    node.inputs.assign(np.input().begin(), np.input().end());
    node.outputs.assign(np.output().begin(), np.output().end());
    for (const auto& ap : np.attribute()) {
      Attribute a;
      a.i = ap.i();
      a.f = ap.f();
      a.s = ap.s();
      a.ints.assign(ap.ints().begin(), ap.ints().end());
      a.floats.assign(ap.floats().begin(), ap.floats().end());
      if (ap.has_t()) a.t = std::make_shared<Tensor>(convert(ap.t()));
      node.attributes.emplace(ap.name(), std::move(a));
    }
    g.nodes_.push_back(std::move(node));
  }
  if (g.inputs_.empty()) fail(ErrorKind::model_format, "graph has no runtime inputs");
  if (g.outputs_.empty()) fail(ErrorKind::model_format, "graph has no outputs");

  // Nodes must be topologically sorted, as the format requires.
  std::set<std::string> known;
  for (const auto& [name, t] : g.initializers_) known.insert(name);
  for (const auto& in : g.inputs_) known.insert(in.name);
  for (const auto& node : g.nodes_) {
    for (const auto& in : node.inputs)
      if (!in.empty() && !known.count(in))
        fail(ErrorKind::model_format, "node '" + node.name + "' (" + node.op_type + ") reads undefined value '" + in + "'");
    for (const auto& out : node.outputs) known.insert(out);
  }
  for (const auto& out : g.outputs_)
    if (!known.count(out.name)) fail(ErrorKind::model_format, "graph output '" + out.name + "' is never produced");
  return g;
}

std::map<std::string, Tensor> Graph::run(const std::map<std::string, Tensor>& feeds,
                                         const std::vector<std::string>& wanted) const {
  std::map<std::string, Tensor> values;
  for (const auto& in : inputs_) {
    auto it = feeds.find(in.name);
    if (it == feeds.end()) fail(ErrorKind::invalid_argument, "missing feed for graph input '" + in.name + "'");
    values[in.name] = it->second;
  }
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    if (auto it = values.find(name); it != values.end()) return &it->second;
    if (auto it = initializers_.find(name); it != initializers_.end()) return &it->second;
    fail(ErrorKind::model_format, "value '" + name + "' not available");
  };
  for (const auto& node : nodes_) {
    std::vector<const Tensor*> ins;
    ins.reserve(node.inputs.size());
    for (const auto& name : node.inputs) ins.push_back(lookup(name));
    std::vector<Tensor> outs = evaluate(node, ins, opset_);
    for (std::size_t k = 0; k < node.outputs.size() && k < outs.size(); ++k)
      if (!node.outputs[k].empty()) values[node.outputs[k]] = std::move(outs[k]);
  }
  std::map<std::string, Tensor> result;
  if (wanted.empty()) {
    for (const auto& out : outputs_) result[out.name] = *lookup(out.name);
  } else {
    for (const auto& name : wanted) result[name] = *lookup(name);
  }
  return result;
}

}  // namespace ace::nn
