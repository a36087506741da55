//! Order-preserving, optionally parallel processing of record streams.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};

/// Records read per batch when streaming.
pub const BATCH_SIZE: usize = 4096;

/// Runs per-record work on `jobs` threads, one meaning inline.
pub struct Workers {
    pool: Option<ThreadPool>,
}

impl Workers {
    pub fn new(jobs: usize) -> Result<Self> {
        if jobs == 0 {
            return Err(Error::Usage("--jobs must be at least 1".into()));
        }
        let pool = if jobs == 1 {
            None
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {jobs} workers: {e}")))?;
            Some(pool)
        };
        Ok(Self { pool })
    }

    /// Maps `f` over `items`, keeping input order in the output.
    pub fn map<I, O, F>(&self, items: Vec<I>, f: F) -> Vec<O>
    where
        I: Send,
        O: Send,
        F: Fn(I) -> O + Sync + Send,
    {
        match &self.pool {
            None => items.into_iter().map(f).collect(),
            Some(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
        }
    }

    /// Streams `input` in batches through `f` and hands results to `sink`
    /// in input order. Stops at the first error in input order. Returns the
    /// number of records processed.
    pub fn stream<I, O, F, S>(
        &self,
        input: impl Iterator<Item = Result<I>>,
        f: F,
        mut sink: S,
    ) -> Result<usize>
    where
        I: Send,
        O: Send,
        F: Fn(I) -> Result<O> + Sync + Send,
        S: FnMut(O) -> Result<()>,
    {
        let mut input = input.peekable();
        let mut count = 0;
        while input.peek().is_some() {
            let mut batch = Vec::with_capacity(BATCH_SIZE);
            let mut read_error = None;
            for item in input.by_ref().take(BATCH_SIZE) {
                match item {
                    Ok(i) => batch.push(i),
                    Err(e) => {
                        read_error = Some(e);
                        break;
                    }
                }
            }
            for out in self.map(batch, &f) {
                sink(out?)?;
                count += 1;
            }
            if let Some(e) = read_error {
                return Err(e);
            }
        }
        Ok(count)
    }
}
