//! Suite configuration: JSON schema, built-in defaults and the config hash.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unclab::grid::GridSpec;
use unclab::metrics::EpsilonSchedule;
use unclab::spec::StateSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Omitted: the balanced length `sqrt(2 pi hbar n)`, which makes `dx == dp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

impl GridConfig {
    pub fn build(&self, hbar: f64) -> unclab::Result<GridSpec> {
        match self.length {
            Some(l) => GridSpec::new(self.n, l, hbar),
            None => GridSpec::balanced(self.n, hbar),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedState {
    pub name: String,
    pub state: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariantDevice {
    pub name: String,
    pub sigma: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialDevice {
    pub name: String,
    pub probe: StateSpec,
    #[serde(default = "one")]
    pub lambda: f64,
}

/// Centred Gaussian probes, one device per width; feeds the trade-off CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSweep {
    pub probe_stds: Vec<f64>,
    #[serde(default = "one")]
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGridConfig {
    /// State-grid nodes per phase-grid cell.
    pub stride: usize,
    /// Odd number of nodes per axis.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "one")]
    pub hbar: f64,
    /// Grid for the preparation and covariant suites.
    pub grid: GridConfig,
    /// Grid for the sequential suite; the pointer model is O(n^2).
    pub sequential_grid: GridConfig,
    /// Calibration tolerances; omitted means the grid-dependent default
    /// `1, 1/2, 1/4, ...` floored at four grid spacings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<EpsilonSchedule>,
    /// Phase grid for the quadrature oracle and the phase-space dumps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_grid: Option<PhaseGridConfig>,
    pub prep_states: Vec<NamedState>,
    pub covariant: Vec<CovariantDevice>,
    /// Input states for the convolution-vs-quadrature comparison.
    pub oracle_states: Vec<NamedState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_sweep: Option<ProbeSweep>,
    #[serde(default)]
    pub sequential: Vec<SequentialDevice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

/// Command-line overrides applied on top of the file or the defaults.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub grid_n: Option<usize>,
    pub grid_length: Option<f64>,
    pub hbar: Option<f64>,
    pub out: Option<PathBuf>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SuiteConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            anyhow!(
                "invalid config at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(n) = o.grid_n {
            self.grid.n = n;
            self.sequential_grid.n = n;
        }
        if let Some(l) = o.grid_length {
            self.grid.length = Some(l);
            self.sequential_grid.length = Some(l);
        }
        if let Some(h) = o.hbar {
            self.hbar = h;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            bail!(
                "invalid config at `hbar`: must be positive, got {}",
                self.hbar
            );
        }
        for (key, g) in [
            ("grid", &self.grid),
            ("sequential_grid", &self.sequential_grid),
        ] {
            g.build(self.hbar)
                .map_err(|e| anyhow!("invalid config at `{key}`: {e}"))?;
        }
        if let Some(pg) = &self.phase_grid {
            if pg.stride == 0 || pg.count < 3 || pg.count % 2 == 0 {
                bail!("invalid config at `phase_grid`: need stride >= 1 and an odd count >= 3");
            }
        }
        if let Some(sweep) = &self.probe_sweep {
            if sweep
                .probe_stds
                .iter()
                .any(|s| !(s.is_finite() && *s > 0.0))
            {
                bail!("invalid config at `probe_sweep.probe_stds`: widths must be positive");
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for name in self.device_names() {
            if !names.insert(name.clone()) {
                bail!("invalid config: duplicate device name `{name}`");
            }
        }
        Ok(())
    }

    fn device_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.covariant.iter().map(|d| d.name.clone()).collect();
        v.extend(self.sequential_devices().into_iter().map(|(d, _)| d.name));
        v
    }

    /// Sweep devices first, in the listed order, then the explicit ones.
    /// Sweep members carry their probe width.
    pub fn sequential_devices(&self) -> Vec<(SequentialDevice, Option<f64>)> {
        let mut v = Vec::new();
        if let Some(sweep) = &self.probe_sweep {
            for &s in &sweep.probe_stds {
                v.push((
                    SequentialDevice {
                        name: format!("probe std {s}"),
                        probe: StateSpec::gaussian(0.0, 0.0, s),
                        lambda: sweep.lambda,
                    },
                    Some(s),
                ));
            }
        }
        v.extend(self.sequential.iter().cloned().map(|d| (d, None)));
        v
    }

    /// SHA-256 of the canonical JSON of the effective config, output
    /// directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("unclab-out"))
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let vac = (0.5f64).sqrt();
        let g = StateSpec::gaussian;

        let mut prep = vec![NamedState {
            name: "vacuum".into(),
            state: StateSpec::Vacuum,
        }];
        for s in [0.2, 0.35, 0.5, 1.0, 1.4, 2.0, 3.0] {
            prep.push(NamedState {
                name: format!("squeezed {s}"),
                state: g(0.0, 0.0, s),
            });
        }
        for s in [0.35, vac, 1.4] {
            for (q0, p0) in [(1.5, -0.5), (-2.0, 1.0), (0.5, 2.0)] {
                prep.push(NamedState {
                    name: format!("gaussian {s:.4} at ({q0}, {p0})"),
                    state: g(q0, p0, s),
                });
            }
        }
        for (a, sign) in [
            (1.0, 1.0),
            (2.0, 1.0),
            (3.0, 1.0),
            (1.0, -1.0),
            (2.0, -1.0),
            (3.0, -1.0),
        ] {
            prep.push(NamedState {
                name: format!("cat a={a} sign={sign}"),
                state: StateSpec::cat(a, sign),
            });
        }
        prep.push(NamedState {
            name: "momentum superposition".into(),
            state: StateSpec::Superposition {
                terms: vec![
                    unclab::spec::Term {
                        coeff: [1.0, 0.0],
                        state: g(0.0, -1.5, vac),
                    },
                    unclab::spec::Term {
                        coeff: [0.0, 1.0],
                        state: g(0.0, 1.5, vac),
                    },
                ],
            },
        });
        // Deterministic mixtures of two and three packets; tenths keep the
        // JSON readable.
        let d = |k: i32| f64::from(k) / 10.0;
        for i in 0..26 {
            let mut components = vec![
                unclab::spec::Weighted {
                    weight: 1.0,
                    state: g(d(i - 10), 0.5, d(8 + i) / 2.0),
                },
                unclab::spec::Weighted {
                    weight: d(5 + i),
                    state: g(d(15 - 2 * i), d(-3 * (i % 3)), 0.9),
                },
            ];
            if i % 2 == 1 {
                components.push(unclab::spec::Weighted {
                    weight: 0.3,
                    state: g(0.0, d(10 - i), 1.2),
                });
            }
            prep.push(NamedState {
                name: format!("mixture {}", i + 1),
                state: StateSpec::Mixture { components },
            });
        }

        let thermal = StateSpec::Mixture {
            components: vec![
                unclab::spec::Weighted {
                    weight: 0.5,
                    state: StateSpec::Vacuum,
                },
                unclab::spec::Weighted {
                    weight: 0.5,
                    state: g(0.0, 0.0, 2.0),
                },
            ],
        };
        let covariant = vec![
            CovariantDevice {
                name: "vacuum".into(),
                sigma: StateSpec::Vacuum,
            },
            CovariantDevice {
                name: "squeezed 0.5".into(),
                sigma: g(0.0, 0.0, 0.5),
            },
            CovariantDevice {
                name: "squeezed 2".into(),
                sigma: g(0.0, 0.0, 2.0),
            },
            CovariantDevice {
                name: "displaced 0.75".into(),
                sigma: g(0.75, 0.0, vac),
            },
            CovariantDevice {
                name: "rank-2 mixture".into(),
                sigma: thermal,
            },
        ];

        let oracle_states = vec![
            NamedState {
                name: "vacuum".into(),
                state: StateSpec::Vacuum,
            },
            NamedState {
                name: "squeezed displaced".into(),
                state: g(0.5, -0.3, 0.5),
            },
            NamedState {
                name: "coherent (1, 1)".into(),
                state: g(1.0, 1.0, vac),
            },
            NamedState {
                name: "cat a=2".into(),
                state: StateSpec::cat(2.0, 1.0),
            },
        ];

        SuiteConfig {
            hbar: 1.0,
            grid: GridConfig {
                n: 1024,
                length: None,
            },
            sequential_grid: GridConfig {
                n: 512,
                length: None,
            },
            schedule: None,
            // +-15 on both axes; +-10 truncates the wider outcome densities.
            phase_grid: Some(PhaseGridConfig {
                stride: 3,
                count: 129,
            }),
            prep_states: prep,
            covariant,
            oracle_states,
            probe_sweep: Some(ProbeSweep {
                probe_stds: vec![0.25, 0.5, 1.0, 2.0],
                lambda: 1.0,
            }),
            sequential: vec![SequentialDevice {
                name: "displaced probe 0.75".into(),
                probe: g(0.75, 0.0, 0.5),
                lambda: 1.0,
            }],
            out: None,
        }
    }
}
