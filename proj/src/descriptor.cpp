#include "sonarmatch/descriptor.hpp"

#include <algorithm>
#include <cmath>

namespace sonarmatch::descriptor {

double margin_ranking_loss(const TripletDistances& d, double mu) {
    if (mu <= 0) throw ConfigError("margin_ranking_loss: mu must be positive");
    return std::max(0.0, mu + d.delta_plus - d.delta_minus);
}

double ratio_loss(const TripletDistances& d) {
    const double m = std::max(d.delta_plus, d.delta_minus);
    const double ep = std::exp(d.delta_plus - m);
    const double en = std::exp(d.delta_minus - m);
    const double sp = ep / (ep + en);
    const double sn = en / (ep + en);
    return sp * sp + (1.0 - sn) * (1.0 - sn);
}

double fpr_at_95(const std::vector<double>& pos_dist, const std::vector<double>& neg_dist) {
    if (pos_dist.empty()) throw InsufficientDataError("fpr_at_95: no positive distances");
    std::vector<double> pos = pos_dist;
    std::sort(pos.begin(), pos.end());
    // Smallest threshold admitting at least 95% of positives.
    const size_t idx =
        static_cast<size_t>(std::ceil(0.95 * static_cast<double>(pos.size()))) - 1;
    const double threshold = pos[std::min(idx, pos.size() - 1)];
    if (neg_dist.empty()) return 0.0;
    size_t fp = 0;
    for (double d : neg_dist)
        if (d <= threshold) ++fp;
    return static_cast<double>(fp) / static_cast<double>(neg_dist.size());
}

namespace {

template <class M>
nn::NamedTensor matrix_tensor(const std::string& name, const M& m,
                              std::vector<uint32_t> dims) {
    nn::NamedTensor t;
    t.name = name;
    t.dims = std::move(dims);
    t.data.resize(static_cast<size_t>(m.size()));
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c)
            t.data[static_cast<size_t>(r) * m.cols() + c] = static_cast<float>(m(r, c));
    return t;
}

const nn::NamedTensor& find_tensor(const std::vector<nn::NamedTensor>& ts, const std::string& name) {
    for (const auto& t : ts)
        if (t.name == name) return t;
    throw TensorShapeError("load_weights: missing tensor '" + name + "'");
}

template <class M>
void fill_matrix(M& m, const nn::NamedTensor& t) {
    if (static_cast<size_t>(m.size()) != t.data.size())
        throw TensorShapeError("load_weights: dimension mismatch for tensor '" + t.name + "'");
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c)
            m(r, c) = t.data[static_cast<size_t>(r) * m.cols() + c];
}

} // namespace

void save_weights(const DescriptorNet& net, const std::string& path) {
    const auto& s = net.shape();
    std::vector<nn::NamedTensor> ts;
    // input_side and pool flag ride along as a 1-D meta tensor.
    nn::NamedTensor meta;
    meta.name = "meta";
    meta.dims = {2};
    meta.data = {static_cast<float>(s.input_side), s.pool ? 1.0f : 0.0f};
    ts.push_back(std::move(meta));
    ts.push_back(matrix_tensor("conv1.weight", net.conv1().weight,
                               {static_cast<uint32_t>(s.conv1_channels), 1u,
                                static_cast<uint32_t>(s.conv1_kernel),
                                static_cast<uint32_t>(s.conv1_kernel)}));
    ts.push_back(matrix_tensor("conv1.bias", net.conv1().bias,
                               {static_cast<uint32_t>(s.conv1_channels)}));
    ts.push_back(matrix_tensor("conv2.weight", net.conv2().weight,
                               {static_cast<uint32_t>(s.conv2_channels),
                                static_cast<uint32_t>(s.conv1_channels),
                                static_cast<uint32_t>(s.conv2_kernel),
                                static_cast<uint32_t>(s.conv2_kernel)}));
    ts.push_back(matrix_tensor("conv2.bias", net.conv2().bias,
                               {static_cast<uint32_t>(s.conv2_channels)}));
    ts.push_back(matrix_tensor("fc.weight", net.fc().weight,
                               {static_cast<uint32_t>(net.fc().weight.rows()),
                                static_cast<uint32_t>(net.fc().weight.cols())}));
    ts.push_back(matrix_tensor("fc.bias", net.fc().bias,
                               {static_cast<uint32_t>(net.fc().bias.size())}));
    nn::save_tensors(path, ts);
}

DescriptorNet load_weights(const std::string& path) {
    const auto ts = nn::load_tensors(path);

    const auto& meta = find_tensor(ts, "meta");
    if (meta.dims.size() != 1 || meta.dims[0] != 2)
        throw TensorShapeError("load_weights: dimension mismatch for tensor 'meta'");
    const auto& w1 = find_tensor(ts, "conv1.weight");
    const auto& w2 = find_tensor(ts, "conv2.weight");
    const auto& wfc = find_tensor(ts, "fc.weight");
    if (w1.dims.size() != 4 || w1.dims[1] != 1)
        throw TensorShapeError("load_weights: dimension mismatch for tensor 'conv1.weight'");
    if (w2.dims.size() != 4)
        throw TensorShapeError("load_weights: dimension mismatch for tensor 'conv2.weight'");
    if (wfc.dims.size() != 2)
        throw TensorShapeError("load_weights: dimension mismatch for tensor 'fc.weight'");

    NetShape shape;
    shape.input_side = static_cast<int>(meta.data[0]);
    shape.pool = meta.data[1] != 0.0f;
    shape.conv1_channels = static_cast<int>(w1.dims[0]);
    shape.conv1_kernel = static_cast<int>(w1.dims[2]);
    shape.conv2_channels = static_cast<int>(w2.dims[0]);
    shape.conv2_kernel = static_cast<int>(w2.dims[2]);
    shape.output_dim = static_cast<int>(wfc.dims[0]);

    if (static_cast<int>(w2.dims[1]) != shape.conv1_channels)
        throw TensorShapeError("load_weights: dimension mismatch for tensor 'conv2.weight'");
    if (w1.dims[2] != w1.dims[3] || w2.dims[2] != w2.dims[3])
        throw TensorShapeError("load_weights: non-square kernel in weight file");

    DescriptorNet net(shape, 0);
    if (static_cast<long>(wfc.dims[1]) != net.fc().weight.cols())
        throw TensorShapeError("load_weights: dimension mismatch for tensor 'fc.weight'");

    fill_matrix(net.conv1().weight, w1);
    fill_matrix(net.conv1().bias, find_tensor(ts, "conv1.bias"));
    fill_matrix(net.conv2().weight, w2);
    fill_matrix(net.conv2().bias, find_tensor(ts, "conv2.bias"));
    fill_matrix(net.fc().weight, wfc);
    fill_matrix(net.fc().bias, find_tensor(ts, "fc.bias"));
    return net;
}

} // namespace sonarmatch::descriptor
