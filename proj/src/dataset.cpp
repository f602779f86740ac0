#include "ddsmc/dataset.hpp"

#include <Eigen/SVD>

#include "ddsmc/csv.hpp"

namespace ddsmc {

void ExcitationSpec::validate(int n_u) const {
    if (T < 1) throw std::invalid_argument("excitation: T must be >= 1");
    if (input_lo.size() != n_u || input_hi.size() != n_u)
        throw std::invalid_argument("excitation: input range dimension mismatch");
    for (int c = 0; c < n_u; ++c)
        if (input_lo[c] > input_hi[c])
            throw std::invalid_argument("excitation: input_lo > input_hi");
    if (blowup_bound <= 0) throw std::invalid_argument("excitation: blowup_bound must be > 0");
}

DataSet collect(const PlantModel& model, const DisturbanceSpec& dist, const ExcitationSpec& exc) {
    model.validate();
    exc.validate(model.n_u());
    const int nx = model.n_x(), nu = model.n_u(), nw = model.n_w(), T = exc.T;
    CounterRng erng(exc.seed);

    DataSet ds;
    ds.U0.resize(nu, T);
    ds.X0.resize(nx, T);
    ds.X1.resize(nx, T);
    ds.Z0.resize(model.n_z(), T);
    ds.W0_oracle = Matrix(nw, T);
    ds.delta = dist.delta;
    ds.T = T;

    auto draw_x0 = [&](std::uint64_t base) {
        Vector x(nx);
        for (int i = 0; i < nx; ++i)
            x[i] = erng.uniform(streams::kExcitationX0, base + i, -0.1, 0.1);
        return x;
    };

    Vector x = exc.x0 ? *exc.x0 : draw_x0(0);
    if (x.size() != nx) throw std::invalid_argument("excitation: x0 dimension mismatch");
    for (int t = 0; t < T; ++t) {
        if (exc.restart && t > 0 && !exc.x0)
            x = draw_x0(static_cast<std::uint64_t>(t) * nx);
        Vector u(nu);
        for (int c = 0; c < nu; ++c)
            u[c] = erng.uniform(streams::kExcitationInput,
                                static_cast<std::uint64_t>(t) * nu + c, exc.input_lo[c],
                                exc.input_hi[c]);
        const Vector w = dist.sample(nw, streams::kCollectDisturbance, t);
        ds.U0.col(t) = u;
        ds.X0.col(t) = x;
        ds.Z0.col(t) = eval_basis(model, x);
        ds.W0_oracle->col(t) = w;
        x = step(model, x, u, w);
        ds.X1.col(t) = x;
        if (x.cwiseAbs().maxCoeff() > exc.blowup_bound)
            throw CollectionError("collection trajectory exceeded blow-up bound at step " +
                                      std::to_string(t),
                                  t);
    }
    return ds;
}

RichnessReport richness_check(const DataSet& ds, double tol) {
    if (ds.Z0.size() == 0) throw std::invalid_argument("richness_check: empty Z0");
    Eigen::JacobiSVD<Matrix> svd(ds.Z0);
    const auto& sv = svd.singularValues();
    RichnessReport rep;
    rep.smallest_sv = sv[sv.size() - 1];
    const double cut = tol * sv[0];
    rep.rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cut) ++rep.rank;
    rep.rich = rep.rank == ds.n_z();
    return rep;
}

void save_dataset(const DataSet& ds, const std::string& path) {
    csv::BlockFile bf;
    bf.put("U0", ds.U0);
    bf.put("X0", ds.X0);
    bf.put("X1", ds.X1);
    bf.put("Z0", ds.Z0);
    if (ds.W0_oracle) bf.put("W0_oracle", *ds.W0_oracle);
    bf.put("delta", ds.delta);
    bf.put("T", static_cast<double>(ds.T));
    csv::write_file(bf, path, {"ddsmc dataset"});
}

DataSet load_dataset(const std::string& path) {
    const auto bf = csv::read_file(path);
    DataSet ds;
    ds.U0 = bf.matrix("U0");
    ds.X0 = bf.matrix("X0");
    ds.X1 = bf.matrix("X1");
    ds.Z0 = bf.matrix("Z0");
    if (bf.matrices.count("W0_oracle")) ds.W0_oracle = bf.matrix("W0_oracle");
    ds.delta = bf.scalar("delta");
    ds.T = static_cast<int>(bf.scalar("T"));
    const Eigen::Index T = ds.T;
    if (ds.U0.cols() != T || ds.X0.cols() != T || ds.X1.cols() != T || ds.Z0.cols() != T)
        throw std::runtime_error("dataset: inconsistent column counts");
    if (ds.X1.rows() != ds.X0.rows() || ds.Z0.rows() < ds.X0.rows())
        throw std::runtime_error("dataset: inconsistent row counts");
    return ds;
}

}  // namespace ddsmc
