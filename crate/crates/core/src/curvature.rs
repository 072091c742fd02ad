//! Riemann, Ricci and Weyl tensors in the null frame, read from the second
//! structure equation `dΓ^i_j + Γ^i_k∧Γ^k_j = ½ R^i_jkl θ^k∧θ^l`.

use std::array;

use crate::error::Result;
use crate::jets::C64;
use crate::nullframe::{
    connection, frame_metric, optical_scalars, partner, structure_coefficients, Arr44,
    ConnectionForms, FrameAt, NullCoframe, OpticalScalars, StructureCoefficients,
};

pub type Arr4444<T> = [[[[T; 4]; 4]; 4]; 4];

/// Weyl scalars `Ψ0..Ψ4`.
pub type WeylScalars = [C64; 5];

#[derive(Debug, Clone)]
pub struct CurvaturePacket {
    /// `R_ijkl` with the first index lowered.
    pub riemann: Arr4444<C64>,
    /// `R_ij = R^k_ikj`.
    pub ricci: Arr44<C64>,
    pub scalar: C64,
    pub weyl: Arr4444<C64>,
    pub psi: WeylScalars,
}

/// Jet order the coframe must be evaluated at for curvature.
pub const CURVATURE_ORDER: usize = 2;

pub fn curvature(frame: &FrameAt, conn: &ConnectionForms) -> Result<CurvaturePacket> {
    let mut mixed: Vec<[Arr44<C64>; 4]> = Vec::with_capacity(4);
    for i in 0..4 {
        let mut row: Vec<Arr44<C64>> = Vec::with_capacity(4);
        for j in 0..4 {
            let mut omega = conn.mixed[i][j].d()?;
            for k in 0..4 {
                omega = &omega + &conn.mixed[i][k].wedge(&conn.mixed[k][j])?;
            }
            let comp = frame.decompose2(&omega);
            row.push(array::from_fn(|k| array::from_fn(|l| comp[k][l].value())));
        }
        mixed.push(array::from_fn(|j| row[j]));
    }
    // R^i_jkl -> R_ijkl
    let riemann: Arr4444<C64> = array::from_fn(|i| mixed[partner(i)]);
    let ricci: Arr44<C64> =
        array::from_fn(|i| array::from_fn(|j| (0..4).map(|k| mixed[k][i][k][j]).sum()));
    let mut scalar = C64::new(0.0, 0.0);
    for i in 0..4 {
        scalar += ricci[i][partner(i)];
    }
    let g = frame_metric;
    let weyl: Arr4444<C64> = array::from_fn(|i| {
        array::from_fn(|j| {
            array::from_fn(|k| {
                array::from_fn(|l| {
                    riemann[i][j][k][l]
                        - 0.5
                            * (g(i, k) * ricci[j][l]
                                - g(i, l) * ricci[j][k]
                                - g(j, k) * ricci[i][l]
                                + g(j, l) * ricci[i][k])
                        + scalar / 6.0 * (g(i, k) * g(j, l) - g(i, l) * g(j, k))
                })
            })
        })
    });
    let r = &riemann;
    let psi = [
        r[3][0][3][0],
        0.5 * (r[3][2][3][0] + r[0][3][1][0]),
        weyl[3][0][2][1],
        0.5 * (r[2][3][2][1] + r[1][2][0][1]),
        r[2][1][2][1],
    ];
    Ok(CurvaturePacket {
        riemann,
        ricci,
        scalar,
        weyl,
        psi,
    })
}

/// Everything computed at one point of a coframe.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub frame: FrameAt,
    pub structure: StructureCoefficients,
    pub connection: ConnectionForms,
    pub optical: OpticalScalars,
    pub curvature: CurvaturePacket,
}

/// Runs the full pipeline (frame, structure, connection, optics, curvature) at a point.
pub fn analyze(coframe: &NullCoframe, point: &[f64]) -> Result<PointGeometry> {
    let frame = coframe.at(point, CURVATURE_ORDER)?;
    let structure = structure_coefficients(&frame)?;
    let connection = connection(&frame, &structure)?;
    let optical = optical_scalars(&frame, &connection)?;
    let curvature = curvature(&frame, &connection)?;
    Ok(PointGeometry {
        frame,
        structure,
        connection,
        optical,
        curvature,
    })
}

/// Ricci components by name, plus the block residuals of an Einstein space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciBlocks {
    pub r12: C64,
    pub r34: C64,
    pub r13: C64,
    pub r23: C64,
    pub r33: C64,
    pub r22: C64,
    pub r24: C64,
    pub r44: C64,
    pub scalar: C64,
    /// `max(|R22|, |R24|, |R44|)`
    pub res_a: f64,
    /// `max(|R12 − Λ|, |R34 − Λ|)`
    pub res_b: f64,
    /// `max(|R33|, |R23|, |R13|)`
    pub res_c: f64,
    /// `|Im R44|`
    pub r44_imag: f64,
}

pub fn ricci_blocks(c: &CurvaturePacket, lambda: f64) -> RicciBlocks {
    let r = &c.ricci;
    let (r12, r34, r13, r23) = (r[0][1], r[2][3], r[0][2], r[1][2]);
    let (r33, r22, r24, r44) = (r[2][2], r[1][1], r[1][3], r[3][3]);
    let l = C64::new(lambda, 0.0);
    RicciBlocks {
        r12,
        r34,
        r13,
        r23,
        r33,
        r22,
        r24,
        r44,
        scalar: c.scalar,
        res_a: r22.norm().max(r24.norm()).max(r44.norm()),
        res_b: (r12 - l).norm().max((r34 - l).norm()),
        res_c: r33.norm().max(r23.norm()).max(r13.norm()),
        r44_imag: r44.im.abs(),
    }
}

/// Largest Ricci component magnitude.
pub fn ricci_max(c: &CurvaturePacket) -> f64 {
    c.ricci
        .iter()
        .flatten()
        .map(|x| x.norm())
        .fold(0.0, f64::max)
}

/// Scale for relative Ricci tests: `max(1, |Ψ2|, ‖Riemann‖∞)`.
pub fn curvature_scale(c: &CurvaturePacket) -> f64 {
    let rm = c
        .riemann
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    1f64.max(c.psi[2].norm()).max(rm)
}

/// Residuals of the algebraic identities every curvature tensor must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub antisymmetry: f64,
    pub pair_symmetry: f64,
    pub bianchi: f64,
    pub weyl_trace: f64,
    pub conjugation: f64,
    /// Difference between the Riemann and Weyl forms of `Ψ0, Ψ1, Ψ3, Ψ4`.
    pub psi_weyl: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.antisymmetry,
            self.pair_symmetry,
            self.bianchi,
            self.weyl_trace,
            self.conjugation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn identity_residuals(c: &CurvaturePacket) -> IdentityResiduals {
    let r = &c.riemann;
    let w = &c.weyl;
    let bar = |i: usize| if i < 2 { 1 - i } else { i };
    let mut out = IdentityResiduals {
        antisymmetry: 0.0,
        pair_symmetry: 0.0,
        bianchi: 0.0,
        weyl_trace: 0.0,
        conjugation: 0.0,
        psi_weyl: 0.0,
    };
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let v = r[i][j][k][l];
                    out.antisymmetry = out
                        .antisymmetry
                        .max((v + r[j][i][k][l]).norm())
                        .max((v + r[i][j][l][k]).norm());
                    out.pair_symmetry = out.pair_symmetry.max((v - r[k][l][i][j]).norm());
                    out.bianchi = out.bianchi.max((v + r[i][k][l][j] + r[i][l][j][k]).norm());
                    out.conjugation = out
                        .conjugation
                        .max((v.conj() - r[bar(i)][bar(j)][bar(k)][bar(l)]).norm());
                }
            }
        }
    }
    // contraction of the Weyl tensor over its first and third slots
    for j in 0..4 {
        for l in 0..4 {
            let t: C64 = (0..4).map(|a| w[a][j][partner(a)][l]).sum();
            out.weyl_trace = out.weyl_trace.max(t.norm());
        }
    }
    let psi_c = [
        w[3][0][3][0],
        w[3][0][3][2],
        w[3][0][2][1],
        w[2][3][2][1],
        w[2][1][2][1],
    ];
    for n in [0, 1, 3, 4] {
        out.psi_weyl = out.psi_weyl.max((c.psi[n] - psi_c[n]).norm());
    }
    out
}
