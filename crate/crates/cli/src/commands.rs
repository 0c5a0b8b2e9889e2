use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use ontovec_core::pipeline::{model_files, train_model, SourceIdentity};
use ontovec_core::query::ConceptIndex;
use ontovec_core::store::{sha256_hex, PROV_FILE, REPORT_FILE, VECTORS_FILE};
use ontovec_core::watcher::CycleOutcome;
use ontovec_core::{ingest, AppConfig, DefaultFetcher, Rdf2VecConfig, Store, SystemClock, TrainConfig, Watcher};

use crate::output;
use crate::{Cli, Command, QueryCommand, Target, TrainArgs};

/// A mistake on the command line or in a user-supplied file.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// 1 when any cause is a user error, else 2.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let user = err.chain().any(|cause| {
        cause.is::<UsageError>()
            || cause
                .downcast_ref::<ontovec_core::Error>()
                .is_some_and(ontovec_core::Error::is_user_error)
    });
    if user {
        1
    } else {
        2
    }
}

/// How often `serve` re-reads manifests written by other processes.
const CATALOG_REFRESH: Duration = Duration::from_secs(30);

struct Ctx {
    store: Option<PathBuf>,
    config: Option<PathBuf>,
}

impl Ctx {
    fn app_config(&self) -> Result<AppConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| usage("no configuration: pass --config or set ONTOVEC_CONFIG"))?;
        if !path.is_file() {
            return Err(usage(format!("config file {} does not exist", path.display())));
        }
        let mut config = AppConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(store) = &self.store {
            config.store_path = store.clone();
        }
        Ok(config)
    }

    fn store(&self) -> Result<Store> {
        if let Some(path) = &self.store {
            return Ok(Store::new(path));
        }
        if self.config.is_some() {
            return Ok(Store::new(self.app_config()?.store_path));
        }
        Err(usage("no store: pass --store, set ONTOVEC_STORE or give a --config"))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        store: cli.store,
        config: cli.config,
    };
    match cli.command {
        Command::Ingest { obo, report } => ingest_cmd(&obo, report),
        Command::Train(args) => train_cmd(&ctx, args),
        Command::Watch { once } => watch_cmd(&ctx, once),
        Command::Serve { host, port, no_watch } => serve_cmd(&ctx, host, port, no_watch),
        Command::Query(q) => query_cmd(&ctx, q),
        Command::Export {
            kg,
            version,
            model,
            output,
        } => {
            let store = ctx.store()?;
            let manifest = store.resolve(&kg, &version)?;
            let bytes = store.read_vectors_bytes(&manifest, model)?;
            write_output(&output, &bytes)
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if path == Path::new("-") {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(bytes)?;
        return Ok(stdout.flush()?);
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn ingest_cmd(path: &Path, report: bool) -> Result<()> {
    let bytes = read_input(path)?;
    let ingested = ingest(&bytes)?;
    let doc = &ingested.document;
    let r = &ingested.report;
    if report {
        let json = serde_json::json!({
            "ontology": doc.ontology_id,
            "data_version": doc.data_version,
            "sha256": sha256_hex(&bytes),
            "terms": r.terms,
            "obsolete": r.obsolete,
            "entities": ingested.graph.num_entities(),
            "relations": ingested.graph.num_relations(),
            "triples": r.triples,
            "dropped_edges": r.dropped_edges,
        });
        println!("{}", serde_json::to_string_pretty(&json)?);
    } else {
        let rows = vec![
            vec!["ontology".into(), doc.ontology_id.clone()],
            vec!["data-version".into(), doc.data_version.clone()],
            vec!["terms".into(), r.terms.to_string()],
            vec!["obsolete".into(), r.obsolete.to_string()],
            vec!["entities".into(), ingested.graph.num_entities().to_string()],
            vec!["relations".into(), ingested.graph.num_relations().to_string()],
            vec!["triples".into(), r.triples.to_string()],
            vec!["dropped edges".into(), r.dropped_edges.to_string()],
        ];
        print!("{}", output::table(&["field", "value"], &rows));
    }
    Ok(())
}

fn train_cmd(ctx: &Ctx, args: TrainArgs) -> Result<()> {
    let store = ctx.store()?;
    let manifest = store.resolve(&args.kg, &args.version)?;
    let configured = match &ctx.config {
        Some(_) => ctx.app_config()?.sources.into_iter().find(|s| s.kg_name == args.kg),
        None => None,
    };
    let (mut train, rdf2vec) = configured
        .map(|s| (s.train, s.rdf2vec))
        .unwrap_or_else(|| (TrainConfig::default(), Rdf2VecConfig::default()));
    if let Some(seed) = args.seed {
        train.seed = seed;
    }
    if let Some(d) = args.dimension {
        train.dimension = d;
    }
    if let Some(e) = args.epochs {
        train.epochs = e;
    }
    train.validate()?;

    let bytes = store.load_source(&manifest)?;
    let ingested = ingest(&bytes)?;
    let trained = train_model(&ingested.graph, args.model, &train, &rdf2vec, &SystemClock)?;
    let identity = SourceIdentity {
        kg: &manifest.kg_name,
        version: &manifest.version_tag,
        url: &manifest.source_url,
        sha256: &manifest.sha256,
    };
    let files = model_files(&identity, &trained, &ingested.graph, &train, &rdf2vec)?;
    std::fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    write_output(&args.output.join(VECTORS_FILE), files.vectors_json.as_bytes())?;
    write_output(&args.output.join(PROV_FILE), files.prov_json.as_bytes())?;
    if let Some(report) = &files.report_json {
        write_output(&args.output.join(REPORT_FILE), report.as_bytes())?;
    }
    let final_loss = trained
        .report
        .as_ref()
        .and_then(|r| r.epoch_losses.last())
        .map_or_else(|| "n/a".to_string(), |l| format!("{l:.6}"));
    println!(
        "trained {} on {}/{} (d={}, epochs={}, seed={}), final loss {final_loss}, written to {}",
        args.model,
        manifest.kg_name,
        manifest.version_tag,
        train.dimension,
        train.epochs,
        train.seed,
        args.output.display()
    );
    Ok(())
}

fn watcher(ctx: &Ctx) -> Result<(AppConfig, Watcher)> {
    let config = ctx.app_config()?;
    if config.sources.is_empty() {
        return Err(usage("the configuration lists no sources"));
    }
    let watcher = Watcher::new(
        Store::new(&config.store_path),
        config.sources.clone(),
        Arc::new(DefaultFetcher::default()),
        Arc::new(SystemClock),
    );
    Ok((config, watcher))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn watch_cmd(ctx: &Ctx, once: bool) -> Result<()> {
    let (_, watcher) = watcher(ctx)?;
    if once {
        let mut failed = Vec::new();
        for (kg, outcome) in watcher.run_once() {
            match outcome {
                Ok(CycleOutcome::Published(m)) => println!("{kg}: published {}", m.version_tag),
                Ok(CycleOutcome::Unchanged) => println!("{kg}: unchanged"),
                Ok(CycleOutcome::Skipped) => println!("{kg}: skipped"),
                Err(e) => {
                    println!("{kg}: failed: {e}");
                    failed.push(e);
                }
            }
        }
        return match failed.into_iter().next() {
            None => Ok(()),
            Some(first) => Err(anyhow::Error::new(first).context("at least one source failed")),
        };
    }
    let stop = Arc::new(AtomicBool::new(false));
    let rt = runtime()?;
    let flag = stop.clone();
    rt.spawn(async move {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("stopping after the current cycle");
        flag.store(true, Ordering::SeqCst);
    });
    watcher.run(|| stop.load(Ordering::SeqCst));
    Ok(())
}

fn serve_cmd(ctx: &Ctx, host: Option<String>, port: Option<u16>, no_watch: bool) -> Result<()> {
    let config = ctx.app_config()?;
    let host = host.unwrap_or_else(|| config.api.host.clone());
    let port = port.unwrap_or(config.api.port);
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| usage(format!("bad listen address {host}:{port}: {e}")))?;
    let state = ontovec_server::state_from_config(&config);
    let stop = Arc::new(AtomicBool::new(false));

    let watch_thread = if no_watch || config.sources.is_empty() {
        None
    } else {
        let state = state.clone();
        let (_, watcher) = watcher(ctx)?;
        let watcher = watcher.on_publish(move |_| state.refresh());
        let stop = stop.clone();
        Some(std::thread::spawn(move || watcher.run(|| stop.load(Ordering::SeqCst))))
    };

    let rt = runtime()?;
    let result = rt.block_on(async {
        let refresher = state.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(CATALOG_REFRESH);
            loop {
                tick.tick().await;
                let state = refresher.clone();
                let _ = tokio::task::spawn_blocking(move || state.refresh()).await;
            }
        });
        ontovec_server::serve(state, addr, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    });
    stop.store(true, Ordering::SeqCst);
    if let Some(handle) = watch_thread {
        tracing::info!("waiting for the watcher to finish its current cycle");
        let _ = handle.join();
    }
    result.with_context(|| format!("serving on {addr}"))
}

fn index(ctx: &Ctx, target: &Target) -> Result<(String, ConceptIndex)> {
    let store = ctx.store()?;
    let manifest = store.resolve(&target.kg, &target.version)?;
    let vectors = store.load_vectors(&manifest, target.model)?;
    let labels = store.load_labels(&manifest)?;
    Ok((manifest.version_tag, ConceptIndex::new(&vectors, &labels)?))
}

fn query_cmd(ctx: &Ctx, q: QueryCommand) -> Result<()> {
    match q {
        QueryCommand::Sim { target, a, b } => {
            let (version, index) = index(ctx, &target)?;
            let sim = index.similarity(&a, &b)?;
            if target.json {
                let body = serde_json::json!({
                    "kg": target.kg, "model": target.model, "version": version,
                    "a": sim.a, "b": sim.b, "score": sim.score,
                });
                println!("{}", serde_json::to_string(&body)?);
            } else {
                print!("{}", output::similarity_line(&sim));
            }
        }
        QueryCommand::Closest {
            target,
            concept,
            k,
            namespace,
        } => {
            if k == 0 {
                return Err(usage("k must be at least 1"));
            }
            let (version, index) = index(ctx, &target)?;
            let result = index.top_k(&concept, k, namespace.as_deref())?;
            if target.json {
                let body = serde_json::json!({
                    "kg": target.kg, "model": target.model, "version": version,
                    "query": result.query, "k": k, "rows": result.rows,
                });
                println!("{}", serde_json::to_string(&body)?);
            } else {
                print!("{}", output::closest_table(&result));
            }
        }
    }
    Ok(())
}
