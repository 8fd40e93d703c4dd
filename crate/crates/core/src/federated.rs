//! Simulated federated training of multinomial logistic regression with FedAvg.
//!
//! Clients exchange [`LocalUpdate`]s only: a parameter vector and a sample
//! count. Every client shares the same L2 strength `1/(C·N)`, with `N` the
//! size of the whole federation, so that averaging the clients' gradient steps
//! reproduces a centralized step on the pooled data.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::baselines::{LogRegConfig, LogRegModel, SoftmaxObjective};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::accuracy;
use crate::exec::Exec;
use crate::rng::substream;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Partition {
    #[default]
    Iid,
    BySubject,
    /// Per-class client proportions drawn from `Dirichlet(alpha)`.
    Dirichlet {
        alpha: f64,
    },
}

fn default_clients() -> usize {
    10
}
fn default_rounds() -> usize {
    10
}
fn default_epochs() -> usize {
    5
}
fn default_lr() -> f64 {
    0.1
}
fn default_fraction() -> f64 {
    1.0
}
fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedConfig {
    #[serde(default = "default_clients")]
    pub n_clients: usize,
    #[serde(default = "default_rounds")]
    pub n_rounds: usize,
    #[serde(default = "default_epochs")]
    pub local_epochs: usize,
    #[serde(default = "default_lr")]
    pub local_learning_rate: f64,
    #[serde(default)]
    pub partition: Partition,
    #[serde(default = "default_fraction")]
    pub client_fraction: f64,
    /// Inverse regularization strength, as in [`LogRegConfig`].
    #[serde(rename = "C", default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for FedConfig {
    fn default() -> Self {
        FedConfig {
            n_clients: default_clients(),
            n_rounds: default_rounds(),
            local_epochs: default_epochs(),
            local_learning_rate: default_lr(),
            partition: Partition::Iid,
            client_fraction: default_fraction(),
            c: default_c(),
            seed: 0,
        }
    }
}

impl FedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::param("n_clients", "must be at least 1"));
        }
        if !(self.client_fraction > 0.0 && self.client_fraction <= 1.0) {
            return Err(Error::param("client_fraction", format!("must be in (0, 1], got {}", self.client_fraction)));
        }
        if !(self.local_learning_rate > 0.0 && self.local_learning_rate.is_finite()) {
            return Err(Error::param("local_learning_rate", "must be positive"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("C", "must be positive"));
        }
        if let Partition::Dirichlet { alpha } = self.partition {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
            }
        }
        Ok(())
    }
}

/// Split sample indices among clients. Each client's list is sorted.
pub fn partition_dataset(data: &Dataset, cfg: &FedConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let k = cfg.n_clients;
    let mut rng = substream(cfg.seed, "fed-partition");
    let mut shards = vec![Vec::new(); k];
    match cfg.partition {
        Partition::Iid => {
            let mut idx: Vec<usize> = (0..data.len()).collect();
            idx.shuffle(&mut rng);
            let (base, extra) = (data.len() / k, data.len() % k);
            let mut start = 0;
            for (c, shard) in shards.iter_mut().enumerate() {
                let len = base + usize::from(c < extra);
                shard.extend_from_slice(&idx[start..start + len]);
                start += len;
            }
        }
        Partition::BySubject => {
            let mut subjects = data.distinct_subjects();
            if subjects.len() < k {
                return Err(Error::Partition(format!("{} subjects cannot cover {k} clients", subjects.len())));
            }
            subjects.shuffle(&mut rng);
            for (i, s) in data.subjects.iter().enumerate() {
                let pos = subjects.iter().position(|x| x == s).expect("subject listed");
                shards[pos % k].push(i);
            }
        }
        Partition::Dirichlet { alpha } => {
            let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::param("alpha", e.to_string()))?;
            for c in 0..data.n_classes() {
                let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == c).collect();
                members.shuffle(&mut rng);
                let draws: Vec<f64> = (0..k).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                let mut cumulative = 0.0;
                let mut start = 0;
                for (client, d) in draws.iter().enumerate() {
                    cumulative += d;
                    let end = if client + 1 == k {
                        members.len()
                    } else {
                        ((cumulative / total) * members.len() as f64).round() as usize
                    };
                    let end = end.clamp(start, members.len());
                    shards[client].extend_from_slice(&members[start..end]);
                    start = end;
                }
            }
        }
    }
    shards.iter_mut().for_each(|s| s.sort_unstable());
    Ok(shards)
}

/// What a client sends to the server. There is deliberately no room for data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalUpdate {
    pub params: Vec<f64>,
    pub n_samples: usize,
}

/// `local_epochs` full-batch gradient steps from the global parameters.
/// An empty shard yields `None`.
pub fn local_train(global: &LogRegModel, shard: &Dataset, cfg: &FedConfig, l2: f64) -> Result<Option<LocalUpdate>> {
    if shard.is_empty() {
        return Ok(None);
    }
    let xs: Vec<&[f64]> = shard.samples.iter().map(Tensor::data).collect();
    let objective = SoftmaxObjective::new(&xs, &shard.labels, global.n_classes, l2)?;
    let mut params = global.params();
    if objective.n_params() != params.len() {
        return Err(Error::DimensionMismatch { expected: params.len(), got: objective.n_params() });
    }
    for _ in 0..cfg.local_epochs {
        let (_, grad) = objective.value_and_gradient(&params);
        params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= cfg.local_learning_rate * g);
    }
    Ok(Some(LocalUpdate { params, n_samples: shard.len() }))
}

/// Sample-count weighted mean of the client parameters.
pub fn fed_avg(updates: &[LocalUpdate]) -> Result<Vec<f64>> {
    let first = updates.first().ok_or(Error::EmptyInput("client updates"))?;
    let total: usize = updates.iter().map(|u| u.n_samples).sum();
    let mut out = vec![0.0; first.params.len()];
    for u in updates {
        if u.params.len() != out.len() {
            return Err(Error::DimensionMismatch { expected: out.len(), got: u.params.len() });
        }
        if u.n_samples == 0 {
            return Err(Error::param("n_samples", "every client update needs a positive count"));
        }
        let w = u.n_samples as f64 / total as f64;
        out.iter_mut().zip(&u.params).for_each(|(o, p)| *o += w * p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FedRoundLog {
    /// 0 is the untrained initial model.
    pub round: usize,
    pub clients: Vec<usize>,
    pub n_k: Vec<usize>,
    pub accuracy: f64,
    /// Global parameters after the round; not written to the round log.
    #[serde(skip)]
    pub global: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Federation {
    pub rounds: Vec<FedRoundLog>,
    pub model: LogRegModel,
    pub shard_sizes: Vec<usize>,
}

impl Federation {
    /// One JSON object per line: `{round, clients, n_k, accuracy}`.
    pub fn to_ndjson(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).map_err(|e| Error::Document(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn select_clients(cfg: &FedConfig, round: usize, available: &[usize]) -> Vec<usize> {
    let m = ((cfg.client_fraction * available.len() as f64).round() as usize).clamp(1, available.len());
    if m == available.len() {
        return available.to_vec();
    }
    let mut rng = substream(cfg.seed, &format!("fed-round-{round}"));
    let mut chosen: Vec<usize> = sample(&mut rng, available.len(), m).into_iter().map(|i| available[i]).collect();
    chosen.sort_unstable();
    chosen
}

/// Select, train locally, average, evaluate; repeated `n_rounds` times from
/// an all-zero model.
pub fn run_federation(train: &Dataset, test: &Dataset, cfg: &FedConfig, exec: Exec) -> Result<Federation> {
    cfg.validate()?;
    let n_features = train.samples.first().ok_or(Error::EmptyInput("training set"))?.len();
    let shards: Vec<Dataset> = partition_dataset(train, cfg)?.iter().map(|idx| train.subset(idx)).collect();
    let available: Vec<usize> = (0..shards.len())
        .filter(|&c| {
            let empty = shards[c].is_empty();
            if empty {
                log::warn!("client {c} holds no samples and is skipped");
            }
            !empty
        })
        .collect();
    let l2 = 1.0 / (cfg.c * train.len() as f64);
    let lr_cfg = LogRegConfig { c: cfg.c, ..LogRegConfig::default() };
    let mut model = LogRegModel::zeros(train.n_classes(), n_features, lr_cfg);
    let mut rounds = vec![FedRoundLog {
        round: 0,
        clients: vec![],
        n_k: vec![],
        accuracy: accuracy(&model, test, exec)?,
        global: model.params(),
    }];
    for round in 1..=cfg.n_rounds {
        let clients = select_clients(cfg, round, &available);
        let updates = exec.try_map(clients.len(), |i| local_train(&model, &shards[clients[i]], cfg, l2))?;
        let updates: Vec<LocalUpdate> = updates.into_iter().flatten().collect();
        model.set_params(&fed_avg(&updates)?)?;
        let acc = accuracy(&model, test, exec)?;
        log::info!("round {round}: {} clients, accuracy {acc:.4}", clients.len());
        rounds.push(FedRoundLog {
            round,
            n_k: updates.iter().map(|u| u.n_samples).collect(),
            clients,
            accuracy: acc,
            global: model.params(),
        });
    }
    model.iterations = cfg.n_rounds * cfg.local_epochs;
    Ok(Federation { rounds, model, shard_sizes: shards.iter().map(Dataset::len).collect() })
}

/// Centralized full-batch gradient descent with the schedule a single
/// client would follow: `n_rounds × local_epochs` steps.
pub fn centralized_gd(train: &Dataset, cfg: &FedConfig) -> Result<LogRegModel> {
    let n_features = train.samples.first().ok_or(Error::EmptyInput("training set"))?.len();
    let lr_cfg = LogRegConfig { c: cfg.c, ..LogRegConfig::default() };
    let mut model = LogRegModel::zeros(train.n_classes(), n_features, lr_cfg);
    let schedule = FedConfig { local_epochs: cfg.n_rounds * cfg.local_epochs, ..*cfg };
    if let Some(u) = local_train(&model, train, &schedule, 1.0 / (cfg.c * train.len() as f64))? {
        model.set_params(&u.params)?;
    }
    Ok(model)
}
