#include "clear/training/classifier.hpp"

#include "clear/errors.hpp"
#include "clear/numerics/hash.hpp"
#include "clear/numerics/optim.hpp"
#include "clear/training/train.hpp"

namespace clear {

std::string parameter_hash(const ParameterList& params) {
  Fnv1a h;
  for (const auto& p : params) {
    h.feed(p.name);
    for (Index d : p.tensor.shape()) h.feed(&d, sizeof(d));
    const Matrix& v = p.tensor.value();
    h.feed(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  }
  return h.hex();
}

HeadResult train_classifier_head(const ClearModel& model, const LabeledImageSet& train, const HeadOptions& opt) {
  train.validate();
  CLEAR_REQUIRE(train.num_content >= 2, "classifier head: need at least two classes");
  const ParameterList frozen = model.encoder_parameters();
  HeadResult out;
  out.encoder_hash_before = parameter_hash(frozen);

  const Matrix features = encode_means(model, train).first;
  Rng rng(opt.seed, 11);
  out.head = ClassifierHead(model.config().d_c, train.num_content, rng);
  Adam adam(tensors_of(out.head.parameters()), AdamOptions{opt.lr});
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (const auto& rows : stratified_batches(train.content, opt.batch_size, rng)) {
      Matrix xb(static_cast<Index>(rows.size()), features.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) xb.row(static_cast<Index>(i)) = features.row(rows[i]);
      adam.zero_grad();
      cross_entropy_logits(out.head(Tensor::constant(xb)), train.content_of(rows)).backward();
      adam.step();
    }
  }
  out.train_metrics = evaluate_logits(out.head(Tensor::constant(features)).value(), train.content);
  out.encoder_hash_after = parameter_hash(frozen);
  return out;
}

Matrix head_logits(const ClearModel& model, const ClassifierHead& head, const LabeledImageSet& data) {
  return head(Tensor::constant(encode_means(model, data).first)).value();
}

BaselineCnn train_baseline_cnn(const LabeledImageSet& train, const BaselineOptions& opt) {
  train.validate();
  CLEAR_REQUIRE(train.num_content >= 2, "baseline: need at least two classes");
  CLEAR_REQUIRE(train.dims.height == train.dims.width, "baseline: square images required");
  ModelConfig mc;
  mc.channels = train.dims.channels;
  mc.image_size = train.dims.height;
  mc.num_classes = train.num_content;
  BaselineCnn cnn(mc, opt.seed);
  Adam adam(tensors_of(cnn.parameters()), AdamOptions{opt.lr});
  Rng rng(opt.seed, 12);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (const auto& rows : stratified_batches(train.content, opt.batch_size, rng)) {
      adam.zero_grad();
      cross_entropy_logits(cnn.logits(train.batch(rows)), train.content_of(rows)).backward();
      adam.step();
    }
  }
  return cnn;
}

Matrix baseline_logits(const BaselineCnn& cnn, const LabeledImageSet& data) {
  Matrix out(data.size(), data.num_content);
  constexpr Index kChunk = 256;
  std::vector<Index> rows;
  for (Index start = 0; start < data.size(); start += kChunk) {
    rows.clear();
    for (Index i = start; i < std::min(data.size(), start + kChunk); ++i) rows.push_back(i);
    out.middleRows(start, static_cast<Index>(rows.size())) = cnn.logits(data.batch(rows)).value();
  }
  return out;
}

}  // namespace clear
