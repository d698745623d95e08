use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use chrono::DateTime;
use serde::Deserialize;
use serde_json::Value;

use super::cache::Cache;
use super::{Comment, InnerCommit, InnerFile, PullRequestRecord, ReviewEvent, ReviewState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Blocking GET used by the client; swapped out in tests.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build();
        Self {
            agent: config.into(),
        }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse> {
        let mut req = self
            .agent
            .get(url)
            .header("Accept", "application/vnd.github+json")
            .header("User-Agent", "jitdp");
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let http_err = |e: ureq::Error| Error::Http {
            url: url.to_owned(),
            reason: e.to_string(),
        };
        let mut resp = req.call().map_err(http_err)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(http_err)?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchReport {
    pub list_requests: usize,
    pub detail_requests: usize,
    pub cached_records: usize,
    pub warnings: Vec<String>,
}

pub struct ForgeClient {
    pub base_url: String,
    pub token: Option<String>,
    pub page_size: usize,
    pub concurrency: usize,
    pub max_retries: u32,
    pub backoff: Duration,
    transport: Arc<dyn Transport>,
}

impl ForgeClient {
    pub fn new(base_url: impl Into<String>, transport: Arc<dyn Transport>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            token: None,
            page_size: 100,
            concurrency: 4,
            max_retries: 5,
            backoff: Duration::from_secs(1),
            transport,
        }
    }

    /// Client against the public API, token from `FORGE_TOKEN`.
    pub fn from_env() -> Self {
        let mut c = Self::new("https://api.github.com", Arc::new(UreqTransport::default()));
        c.token = std::env::var(super::TOKEN_ENV).ok().filter(|t| !t.is_empty());
        c
    }

    /// GET with exponential backoff on rate limiting. `Ok(None)` means the
    /// body was not valid JSON.
    fn get_json(&self, url: &str, counter: &AtomicUsize, repo_id: &str) -> Result<Option<Value>> {
        let mut attempt = 0;
        loop {
            counter.fetch_add(1, Ordering::SeqCst);
            let resp = self.transport.get(url, self.token.as_deref())?;
            match resp.status {
                200..=299 => return Ok(serde_json::from_str(&resp.body).ok()),
                403 | 429 if attempt < self.max_retries => {
                    let wait = self.backoff * 2u32.pow(attempt);
                    log::warn!("rate limited on {url}; retrying in {wait:?}");
                    thread::sleep(wait);
                    attempt += 1;
                }
                404 => return Err(Error::RepoNotFound(repo_id.to_owned())),
                s => {
                    return Err(Error::Http {
                        url: url.to_owned(),
                        reason: format!("status {s}"),
                    })
                }
            }
        }
    }

    /// All pages of a list endpoint; malformed pages are skipped.
    fn get_pages(
        &self,
        path: &str,
        counter: &AtomicUsize,
        repo_id: &str,
        warnings: &Mutex<Vec<String>>,
    ) -> Result<Vec<Value>> {
        let sep = if path.contains('?') { '&' } else { '?' };
        let mut items = Vec::new();
        for page in 1..=MAX_PAGES {
            let url = format!(
                "{}{path}{sep}per_page={}&page={page}",
                self.base_url, self.page_size
            );
            match self.get_json(&url, counter, repo_id)? {
                Some(Value::Array(batch)) => {
                    let n = batch.len();
                    items.extend(batch);
                    if n < self.page_size {
                        break;
                    }
                }
                _ => {
                    log::warn!("skipping malformed page {url}");
                    warnings.lock().unwrap().push(format!("malformed page {url}"));
                }
            }
        }
        Ok(items)
    }
}

const MAX_PAGES: usize = 10_000;

#[derive(Deserialize)]
struct ListedPull {
    number: u64,
    updated_at: Option<String>,
    merged_at: Option<String>,
}

fn ts(v: &Value) -> Option<i64> {
    DateTime::parse_from_rfc3339(v.as_str()?)
        .ok()
        .map(|d| d.timestamp())
}

fn login(v: &Value) -> String {
    v["user"]["login"].as_str().unwrap_or("").to_owned()
}

fn fetch_detail(
    client: &ForgeClient,
    repo_id: &str,
    number: u64,
    counter: &AtomicUsize,
    warnings: &Mutex<Vec<String>>,
) -> Result<Option<PullRequestRecord>> {
    let base = format!("/repos/{repo_id}");
    let malformed = |what: &str| {
        let msg = format!("PR #{number}: malformed {what}");
        log::warn!("{msg}");
        warnings.lock().unwrap().push(msg);
        Ok(None)
    };
    let Some(pull) = client.get_json(
        &format!("{}{base}/pulls/{number}", client.base_url),
        counter,
        repo_id,
    )?
    else {
        return malformed("pull");
    };
    let (Some(created_at), merged_at) = (ts(&pull["created_at"]), ts(&pull["merged_at"])) else {
        return malformed("pull timestamps");
    };

    let mut inner_commits = Vec::new();
    for c in client.get_pages(&format!("{base}/pulls/{number}/commits"), counter, repo_id, warnings)? {
        let Some(sha) = c["sha"].as_str() else {
            return malformed("commit listing");
        };
        let Some(detail) = client.get_json(
            &format!("{}{base}/commits/{sha}", client.base_url),
            counter,
            repo_id,
        )?
        else {
            return malformed("commit");
        };
        let files = detail["files"]
            .as_array()
            .map(|fs| {
                fs.iter()
                    .map(|f| InnerFile {
                        path: f["filename"].as_str().unwrap_or("").to_owned(),
                        lines_added: f["additions"].as_u64().unwrap_or(0),
                        lines_deleted: f["deletions"].as_u64().unwrap_or(0),
                    })
                    .collect()
            })
            .unwrap_or_default();
        inner_commits.push(InnerCommit {
            hash: sha.to_owned(),
            message: c["commit"]["message"].as_str().unwrap_or("").to_owned(),
            author_time: ts(&c["commit"]["author"]["date"]).unwrap_or(created_at),
            lines_added: detail["stats"]["additions"].as_u64().unwrap_or(0),
            lines_deleted: detail["stats"]["deletions"].as_u64().unwrap_or(0),
            files,
        });
    }
    inner_commits.sort_by_key(|c| c.author_time);

    let review_comments =
        client.get_pages(&format!("{base}/pulls/{number}/comments"), counter, repo_id, warnings)?;
    let mut reviews = Vec::new();
    for r in client.get_pages(&format!("{base}/pulls/{number}/reviews"), counter, repo_id, warnings)? {
        let state = match r["state"].as_str().unwrap_or("") {
            "APPROVED" => ReviewState::Approved,
            "CHANGES_REQUESTED" => ReviewState::ChangesRequested,
            "PENDING" => continue,
            _ => ReviewState::Commented,
        };
        let Some(submitted_at) = ts(&r["submitted_at"]) else {
            continue;
        };
        let id = r["id"].as_u64();
        reviews.push(ReviewEvent {
            submitted_at,
            reviewer_id: login(&r),
            comment_count: review_comments
                .iter()
                .filter(|c| id.is_some() && c["pull_request_review_id"].as_u64() == id)
                .count() as u64,
            state,
        });
    }
    reviews.sort_by_key(|r| r.submitted_at);

    let mut comments: Vec<Comment> = client
        .get_pages(&format!("{base}/issues/{number}/comments"), counter, repo_id, warnings)?
        .iter()
        .filter_map(|c| {
            Some(Comment {
                created_at: ts(&c["created_at"])?,
                author_id: login(c),
                reaction_count: c["reactions"]["total_count"].as_u64().unwrap_or(0),
            })
        })
        .collect();
    comments.sort_by_key(|c| c.created_at);

    Ok(Some(PullRequestRecord {
        number,
        created_at,
        merged_at,
        merge_commit_hash: pull["merge_commit_sha"].as_str().map(str::to_owned),
        review_requested_at: None,
        inner_commits,
        comments,
        reviews,
    }))
}

/// Retrieves all merged pull requests of `repo_id` (`owner/name`), serving
/// unchanged records from `cache`. A cache marked complete answers without
/// any request.
pub fn fetch_pull_requests(
    client: &ForgeClient,
    repo_id: &str,
    cache: &mut Cache,
) -> Result<(Vec<PullRequestRecord>, FetchReport)> {
    let mut report = FetchReport::default();
    if cache.is_complete() {
        let prs = cache.load_all()?;
        report.cached_records = prs.len();
        return Ok((prs, report));
    }
    let list_counter = AtomicUsize::new(0);
    let detail_counter = AtomicUsize::new(0);
    let warnings = Mutex::new(Vec::new());

    let listed = client.get_pages(
        &format!("/repos/{repo_id}/pulls?state=closed"),
        &list_counter,
        repo_id,
        &warnings,
    )?;
    let mut merged = Vec::new();
    for item in listed {
        match serde_json::from_value::<ListedPull>(item) {
            Ok(p) if p.merged_at.is_some() => merged.push(p),
            Ok(_) => {}
            Err(e) => warnings.lock().unwrap().push(format!("malformed listing entry: {e}")),
        }
    }
    merged.sort_by_key(|p| p.number);
    merged.dedup_by_key(|p| p.number);

    let mut records: Vec<Option<PullRequestRecord>> = vec![None; merged.len()];
    let mut todo = Vec::new();
    for (i, p) in merged.iter().enumerate() {
        let stamp = p.updated_at.clone().unwrap_or_default();
        match cache.fresh(p.number, &stamp) {
            Some(pr) => {
                report.cached_records += 1;
                records[i] = Some(pr);
            }
            None => todo.push(i),
        }
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<Option<PullRequestRecord>>)>> = Mutex::new(Vec::new());
    thread::scope(|s| {
        for _ in 0..client.concurrency.max(1).min(todo.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = todo.get(k) else { break };
                let r = fetch_detail(client, repo_id, merged[i].number, &detail_counter, &warnings);
                results.lock().unwrap().push((i, r));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    for (i, r) in results {
        if let Some(pr) = r? {
            cache.store(&pr, merged[i].updated_at.as_deref().unwrap_or(""))?;
            records[i] = Some(pr);
        }
    }
    let prs: Vec<PullRequestRecord> = records.into_iter().flatten().collect();
    let numbers: Vec<u64> = prs.iter().map(|p| p.number).collect();
    cache.mark_complete(&numbers)?;

    report.list_requests = list_counter.into_inner();
    report.detail_requests = detail_counter.into_inner();
    report.warnings = warnings.into_inner().unwrap();
    Ok((prs, report))
}
