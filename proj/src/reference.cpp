// Adaptive eighth-order Dormand-Prince integrator used to produce reference
// solutions. Coefficients, error estimator and dense output follow Hairer and
// Wanner's DOP853 (Solving ODEs I, 2nd ed., Springer 1993).

#include "kcdc/integrators.hpp"

#include "kcdc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kcdc {

namespace {

// clang-format off
constexpr double c2 = 0.526001519587677318785587544488E-01, c3 = 0.789002279381515978178381316732E-01,
    c4 = 0.118350341907227396726757197510E+00, c5 = 0.281649658092772603273242802490E+00,
    c6 = 0.333333333333333333333333333333E+00, c7 = 0.25E+00, c8 = 0.307692307692307692307692307692E+00,
    c9 = 0.651282051282051282051282051282E+00, c10 = 0.6E+00, c11 = 0.857142857142857142857142857142E+00,
    c14 = 0.1E+00, c15 = 0.2E+00, c16 = 0.777777777777777777777777777778E+00;

constexpr double b1 = 5.42937341165687622380535766363E-2, b6 = 4.45031289275240888144113950566E0,
    b7 = 1.89151789931450038304281599044E0, b8 = -5.8012039600105847814672114227E0,
    b9 = 3.1116436695781989440891606237E-1, b10 = -1.52160949662516078556178806805E-1,
    b11 = 2.01365400804030348374776537501E-1, b12 = 4.47106157277725905176885569043E-2;

constexpr double bhh1 = 0.244094488188976377952755905512E+00, bhh2 = 0.733846688281611857341361741547E+00,
    bhh3 = 0.220588235294117647058823529412E-01;

constexpr double er1 = 0.1312004499419488073250102996E-01, er6 = -0.1225156446376204440720569753E+01,
    er7 = -0.4957589496572501915214079952E+00, er8 = 0.1664377182454986536961530415E+01,
    er9 = -0.3503288487499736816886487290E+00, er10 = 0.3341791187130174790297318841E+00,
    er11 = 0.8192320648511571246570742613E-01, er12 = -0.2235530786388629525884427845E-01;

constexpr double a21 = 5.26001519587677318785587544488E-2, a31 = 1.97250569845378994544595329183E-2,
    a32 = 5.91751709536136983633785987549E-2, a41 = 2.95875854768068491816892993775E-2,
    a43 = 8.87627564304205475450678981324E-2, a51 = 2.41365134159266685502369798665E-1,
    a53 = -8.84549479328286085344864962717E-1, a54 = 9.24834003261792003115737966543E-1,
    a61 = 3.7037037037037037037037037037E-2, a64 = 1.70828608729473871279604482173E-1,
    a65 = 1.25467687566822425016691814123E-1, a71 = 3.7109375E-2, a74 = 1.70252211019544039314978060272E-1,
    a75 = 6.02165389804559606850219397283E-2, a76 = -1.7578125E-2, a81 = 3.70920001185047927108779319836E-2,
    a84 = 1.70383925712239993810214054705E-1, a85 = 1.07262030446373284651809199168E-1,
    a86 = -1.53194377486244017527936158236E-2, a87 = 8.27378916381402288758473766002E-3,
    a91 = 6.24110958716075717114429577812E-1, a94 = -3.36089262944694129406857109825E0,
    a95 = -8.68219346841726006818189891453E-1, a96 = 2.75920996994467083049415600797E1,
    a97 = 2.01540675504778934086186788979E1, a98 = -4.34898841810699588477366255144E1,
    a101 = 4.77662536438264365890433908527E-1, a104 = -2.48811461997166764192642586468E0,
    a105 = -5.90290826836842996371446475743E-1, a106 = 2.12300514481811942347288949897E1,
    a107 = 1.52792336328824235832596922938E1, a108 = -3.32882109689848629194453265587E1,
    a109 = -2.03312017085086261358222928593E-2, a111 = -9.3714243008598732571704021658E-1,
    a114 = 5.18637242884406370830023853209E0, a115 = 1.09143734899672957818500254654E0,
    a116 = -8.14978701074692612513997267357E0, a117 = -1.85200656599969598641566180701E1,
    a118 = 2.27394870993505042818970056734E1, a119 = 2.49360555267965238987089396762E0,
    a1110 = -3.0467644718982195003823669022E0, a121 = 2.27331014751653820792359768449E0,
    a124 = -1.05344954667372501984066689879E1, a125 = -2.00087205822486249909675718444E0,
    a126 = -1.79589318631187989172765950534E1, a127 = 2.79488845294199600508499808837E1,
    a128 = -2.85899827713502369474065508674E0, a129 = -8.87285693353062954433549289258E0,
    a1210 = 1.23605671757943030647266201528E1, a1211 = 6.43392746015763530355970484046E-1;

constexpr double a141 = 5.61675022830479523392909219681E-2, a147 = 2.53500210216624811088794765333E-1,
    a148 = -2.46239037470802489917441475441E-1, a149 = -1.24191423263816360469010140626E-1,
    a1410 = 1.5329179827876569731206322685E-1, a1411 = 8.20105229563468988491666602057E-3,
    a1412 = 7.56789766054569976138603589584E-3, a1413 = -8.298E-3,
    a151 = 3.18346481635021405060768473261E-2, a156 = 2.83009096723667755288322961402E-2,
    a157 = 5.35419883074385676223797384372E-2, a158 = -5.49237485713909884646569340306E-2,
    a1511 = -1.08347328697249322858509316994E-4, a1512 = 3.82571090835658412954920192323E-4,
    a1513 = -3.40465008687404560802977114492E-4, a1514 = 1.41312443674632500278074618366E-1,
    a161 = -4.28896301583791923408573538692E-1, a166 = -4.69762141536116384314449447206E0,
    a167 = 7.68342119606259904184240953878E0, a168 = 4.06898981839711007970213554331E0,
    a169 = 3.56727187455281109270669543021E-1, a1613 = -1.39902416515901462129418009734E-3,
    a1614 = 2.9475147891527723389556272149E0, a1615 = -9.15095847217987001081870187138E0;

constexpr double d41 = -0.84289382761090128651353491142E+01, d46 = 0.56671495351937776962531783590E+00,
    d47 = -0.30689499459498916912797304727E+01, d48 = 0.23846676565120698287728149680E+01,
    d49 = 0.21170345824450282767155149946E+01, d410 = -0.87139158377797299206789907490E+00,
    d411 = 0.22404374302607882758541771650E+01, d412 = 0.63157877876946881815570249290E+00,
    d413 = -0.88990336451333310820698117400E-01, d414 = 0.18148505520854727256656404962E+02,
    d415 = -0.91946323924783554000451984436E+01, d416 = -0.44360363875948939664310572000E+01,
    d51 = 0.10427508642579134603413151009E+02, d56 = 0.24228349177525818288430175319E+03,
    d57 = 0.16520045171727028198505394887E+03, d58 = -0.37454675472269020279518312152E+03,
    d59 = -0.22113666853125306036270938578E+02, d510 = 0.77334326684722638389603898808E+01,
    d511 = -0.30674084731089398182061213626E+02, d512 = -0.93321305264302278729567221706E+01,
    d513 = 0.15697238121770843886131091075E+02, d514 = -0.31139403219565177677282850411E+02,
    d515 = -0.93529243588444783865713862664E+01, d516 = 0.35816841486394083752465898540E+02,
    d61 = 0.19985053242002433820987653617E+02, d66 = -0.38703730874935176555105901742E+03,
    d67 = -0.18917813819516756882830838328E+03, d68 = 0.52780815920542364900561016686E+03,
    d69 = -0.11573902539959630126141871134E+02, d610 = 0.68812326946963000169666922661E+01,
    d611 = -0.10006050966910838403183860980E+01, d612 = 0.77771377980534432092869265740E+00,
    d613 = -0.27782057523535084065932004339E+01, d614 = -0.60196695231264120758267380846E+02,
    d615 = 0.84320405506677161018159903784E+02, d616 = 0.11992291136182789328035130030E+02,
    d71 = -0.25693933462703749003312586129E+02, d76 = -0.15418974869023643374053993627E+03,
    d77 = -0.23152937917604549567536039109E+03, d78 = 0.35763911791061412378285349910E+03,
    d79 = 0.93405324183624310003907691704E+02, d710 = -0.37458323136451633156875139351E+02,
    d711 = 0.10409964950896230045147246184E+03, d712 = 0.29840293426660503123344363579E+02,
    d713 = -0.43533456590011143754432175058E+02, d714 = 0.96324553959188282948394950600E+02,
    d715 = -0.39177261675615439165231486172E+02, d716 = -0.14972683625798562581422125276E+03;
// clang-format on

// Step control. beta > 0 turns the classical controller into a PI controller.
constexpr double kSafety = 0.9;
constexpr double kFacMin = 1.0 / 3.0; // h_new >= h / 3
constexpr double kFacMax = 6.0;       // h_new <= 6 h
constexpr double kBeta = 0.04;
constexpr long kMaxSteps = 50'000'000;

} // namespace

class ReferenceSolver::Impl {
public:
    Impl(const QuadraticSystem& sys, const StateVector& u0, double t0, double t_end, double tol);

    StateVector at(double t);

    long accepted = 0;
    long rejected = 0;

private:
    StateVector f(const StateVector& y) const { return polarize(sys_, y, y) + sys_.linear() * y; }

    // Advances by one accepted step: [told_, t_] with ynew_ = u(t_).
    void advance();
    // Twelve stages from (y_, k1_) with step h_; leaves the 8th order
    // solution in ynew_ and the weighted stage sum in bsum_.
    void stages();
    // Scaled local error (<= 1 means accept).
    double error_estimate() const;
    // Three extra stages and the coefficients of the 7th order interpolant
    // on [told_, t_]. Requires k13_ = f(ynew_).
    void prepare_dense();
    StateVector dense(double t) const;
    double initial_step() const;

    const QuadraticSystem& sys_;
    double tol_;
    double t_end_;
    double hmin_;
    double hmax_;

    // Last accepted step: from (told_, y_) to (t_, ynew_) with size h_.
    double told_ = 0.0, t_ = 0.0, h_ = 0.0, h_next_ = 0.0;
    double facold_ = 1e-4;
    bool reject_ = false;
    bool started_ = false;
    bool dense_ready_ = false;
    double last_query_ = 0.0;

    StateVector y_, ynew_, bsum_;
    StateVector k1_, k2_, k3_, k4_, k5_, k6_, k7_, k8_, k9_, k10_, k11_, k12_, k13_;
    StateVector rc1_, rc2_, rc3_, rc4_, rc5_, rc6_, rc7_, rc8_;
};

ReferenceSolver::Impl::Impl(const QuadraticSystem& sys, const StateVector& u0, double t0, double t_end, double tol)
    : sys_(sys), tol_(tol), t_end_(t_end)
{
    if (!(tol >= 1e-14 && tol <= 1e-6))
        throw ValidationError("reference solver: tol must lie in [1e-14, 1e-6]");
    if (u0.size() != sys.dim())
        throw ValidationError("reference solver: dimension mismatch");
    if (!u0.allFinite())
        throw ValidationError("reference solver: non-finite initial state");
    if (!(t_end > t0) || !std::isfinite(t0) || !std::isfinite(t_end))
        throw ValidationError("reference solver: need t0 < t_end");

    hmin_ = 1e-14 * (t_end - t0);
    hmax_ = t_end - t0;
    told_ = t_ = last_query_ = t0;
    ynew_ = u0;
    k13_ = f(u0);
}

void ReferenceSolver::Impl::stages()
{
    const double h = h_;
    const StateVector& y = y_;
    k2_ = f(y + h * a21 * k1_);
    k3_ = f(y + h * (a31 * k1_ + a32 * k2_));
    k4_ = f(y + h * (a41 * k1_ + a43 * k3_));
    k5_ = f(y + h * (a51 * k1_ + a53 * k3_ + a54 * k4_));
    k6_ = f(y + h * (a61 * k1_ + a64 * k4_ + a65 * k5_));
    k7_ = f(y + h * (a71 * k1_ + a74 * k4_ + a75 * k5_ + a76 * k6_));
    k8_ = f(y + h * (a81 * k1_ + a84 * k4_ + a85 * k5_ + a86 * k6_ + a87 * k7_));
    k9_ = f(y + h * (a91 * k1_ + a94 * k4_ + a95 * k5_ + a96 * k6_ + a97 * k7_ + a98 * k8_));
    k10_ = f(y + h * (a101 * k1_ + a104 * k4_ + a105 * k5_ + a106 * k6_ + a107 * k7_ + a108 * k8_ + a109 * k9_));
    k11_ = f(y + h * (a111 * k1_ + a114 * k4_ + a115 * k5_ + a116 * k6_ + a117 * k7_ + a118 * k8_ + a119 * k9_ +
                      a1110 * k10_));
    k12_ = f(y + h * (a121 * k1_ + a124 * k4_ + a125 * k5_ + a126 * k6_ + a127 * k7_ + a128 * k8_ + a129 * k9_ +
                      a1210 * k10_ + a1211 * k11_));
    bsum_ = b1 * k1_ + b6 * k6_ + b7 * k7_ + b8 * k8_ + b9 * k9_ + b10 * k10_ + b11 * k11_ + b12 * k12_;
    ynew_ = y + h * bsum_;
}

double ReferenceSolver::Impl::error_estimate() const
{
    const auto n = static_cast<double>(y_.size());
    double err5 = 0.0, err3 = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
        const double sk = tol_ + tol_ * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
        double e = (bsum_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k12_[i]) / sk;
        err3 += e * e;
        e = (er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] + er9 * k9_[i] + er10 * k10_[i] +
             er11 * k11_[i] + er12 * k12_[i]) /
            sk;
        err5 += e * e;
    }
    double deno = err5 + 0.01 * err3;
    if (deno <= 0.0)
        deno = 1.0;
    return std::abs(h_) * err5 / std::sqrt(deno * n);
}

void ReferenceSolver::Impl::prepare_dense()
{
    const double h = h_;
    const StateVector& y = y_;
    rc1_ = y;
    rc2_ = ynew_ - y;
    rc3_ = h * k1_ - rc2_;
    rc4_ = rc2_ - h * k13_ - rc3_;
    StateVector p5 = d41 * k1_ + d46 * k6_ + d47 * k7_ + d48 * k8_ + d49 * k9_ + d410 * k10_ + d411 * k11_ + d412 * k12_;
    StateVector p6 = d51 * k1_ + d56 * k6_ + d57 * k7_ + d58 * k8_ + d59 * k9_ + d510 * k10_ + d511 * k11_ + d512 * k12_;
    StateVector p7 = d61 * k1_ + d66 * k6_ + d67 * k7_ + d68 * k8_ + d69 * k9_ + d610 * k10_ + d611 * k11_ + d612 * k12_;
    StateVector p8 = d71 * k1_ + d76 * k6_ + d77 * k7_ + d78 * k8_ + d79 * k9_ + d710 * k10_ + d711 * k11_ + d712 * k12_;

    const StateVector k14 = f(y + h * (a141 * k1_ + a147 * k7_ + a148 * k8_ + a149 * k9_ + a1410 * k10_ +
                                       a1411 * k11_ + a1412 * k12_ + a1413 * k13_));
    const StateVector k15 = f(y + h * (a151 * k1_ + a156 * k6_ + a157 * k7_ + a158 * k8_ + a1511 * k11_ +
                                       a1512 * k12_ + a1513 * k13_ + a1514 * k14));
    const StateVector k16 = f(y + h * (a161 * k1_ + a166 * k6_ + a167 * k7_ + a168 * k8_ + a169 * k9_ +
                                       a1613 * k13_ + a1614 * k14 + a1615 * k15));

    rc5_ = h * (p5 + d413 * k13_ + d414 * k14 + d415 * k15 + d416 * k16);
    rc6_ = h * (p6 + d513 * k13_ + d514 * k14 + d515 * k15 + d516 * k16);
    rc7_ = h * (p7 + d613 * k13_ + d614 * k14 + d615 * k15 + d616 * k16);
    rc8_ = h * (p8 + d713 * k13_ + d714 * k14 + d715 * k15 + d716 * k16);
    dense_ready_ = true;
}

StateVector ReferenceSolver::Impl::dense(double t) const
{
    const double s = (t - told_) / h_;
    const double s1 = 1.0 - s;
    return rc1_ + s * (rc2_ + s1 * (rc3_ + s * (rc4_ + s1 * (rc5_ + s * (rc6_ + s1 * (rc7_ + s * rc8_))))));
}

double ReferenceSolver::Impl::initial_step() const
{
    double dnf = 0.0, dny = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
        const double sk = tol_ + tol_ * std::abs(y_[i]);
        dnf += (k1_[i] / sk) * (k1_[i] / sk);
        dny += (y_[i] / sk) * (y_[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax_);

    const StateVector k2 = f(y_ + h * k1_);
    double der2 = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
        const double s = (k2[i] - k1_[i]) / (tol_ + tol_ * std::abs(y_[i]));
        der2 += s * s;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
    return std::min({100.0 * h, h1, hmax_});
}

void ReferenceSolver::Impl::advance()
{
    // Roll the previous accepted step forward (FSAL: f(ynew) is the next k1).
    y_ = ynew_;
    k1_ = k13_;
    told_ = t_;
    dense_ready_ = false;
    if (!started_) {
        h_next_ = initial_step();
        started_ = true;
    }

    const double expo1 = 1.0 / 8.0 - kBeta * 0.2;
    double h = h_next_;
    for (;;) {
        if (accepted + rejected > kMaxSteps)
            throw NumericalError("reference solver: step limit exceeded at t = " + std::to_string(told_));
        if (h < hmin_ || 0.1 * h <= std::abs(told_) * std::numeric_limits<double>::epsilon()) {
            std::ostringstream os;
            os << "reference solver: step size underflow (h = " << h << ") at t = " << told_;
            throw NumericalError(os.str());
        }
        bool last = false;
        if (told_ + 1.01 * h - t_end_ > 0.0) {
            h = t_end_ - told_;
            last = true;
        }

        h_ = h;
        stages();
        const double err = error_estimate();
        if (!std::isfinite(err))
            throw NumericalError("reference solver: non-finite error estimate at t = " + std::to_string(told_));

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            const double fac =
                std::clamp(fac11 / std::pow(facold_, kBeta) / kSafety, 1.0 / kFacMax, 1.0 / kFacMin);
            double hnew = std::min(h / fac, hmax_);
            if (reject_)
                hnew = std::min(hnew, h);
            facold_ = std::max(err, 1e-4);
            reject_ = false;
            ++accepted;
            k13_ = f(ynew_);
            t_ = last ? t_end_ : told_ + h;
            h_next_ = hnew;
            return;
        }
        h = h / std::min(1.0 / kFacMin, fac11 / kSafety);
        reject_ = true;
        ++rejected;
    }
}

StateVector ReferenceSolver::Impl::at(double t)
{
    if (!(t >= last_query_))
        throw ValidationError("reference solver: query times must be non-decreasing");
    if (t > t_end_)
        throw ValidationError("reference solver: query beyond t_end");
    last_query_ = t;
    while (t > t_)
        advance();
    if (t == t_)
        return ynew_;
    if (!dense_ready_)
        prepare_dense();
    return dense(t);
}

ReferenceSolver::ReferenceSolver(const QuadraticSystem& sys, const StateVector& u0, double t0, double t_end,
                                 double tol)
    : impl_(std::make_unique<Impl>(sys, u0, t0, t_end, tol))
{
}

ReferenceSolver::~ReferenceSolver() = default;
ReferenceSolver::ReferenceSolver(ReferenceSolver&&) noexcept = default;
ReferenceSolver& ReferenceSolver::operator=(ReferenceSolver&&) noexcept = default;

StateVector ReferenceSolver::at(double t)
{
    return impl_->at(t);
}

long ReferenceSolver::accepted_steps() const noexcept
{
    return impl_->accepted;
}

long ReferenceSolver::rejected_steps() const noexcept
{
    return impl_->rejected;
}

Trajectory reference_solve(const QuadraticSystem& sys, const StateVector& u0, std::span<const double> t_out,
                           double tol)
{
    if (t_out.empty())
        throw ValidationError("reference_solve: no output times");
    for (std::size_t i = 1; i < t_out.size(); ++i)
        if (!(t_out[i] > t_out[i - 1]))
            throw ValidationError("reference_solve: output times must be strictly increasing");

    Trajectory traj;
    traj.meta = TrajectoryMeta{"reference", 0.0, 0, 0};
    traj.times.assign(t_out.begin(), t_out.end());
    traj.states.reserve(t_out.size());
    traj.states.push_back(u0);
    if (t_out.size() == 1)
        return traj;

    ReferenceSolver solver(sys, u0, t_out.front(), t_out.back(), tol);
    for (std::size_t i = 1; i < t_out.size(); ++i)
        traj.states.push_back(solver.at(t_out[i]));
    return traj;
}

} // namespace kcdc
