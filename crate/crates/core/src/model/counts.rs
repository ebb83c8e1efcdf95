use serde::{Deserialize, Serialize};

/// Sufficient statistics read by the conditionals. All tables are flat and
/// row-major; see the accessor for each layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTables {
    pub num_doc_types: usize,
    pub num_source_types: usize,
    pub num_topics: usize,
    pub vocab_size: usize,
    /// `[T]` documents per document-type.
    pub doc_type: Vec<u32>,
    /// `[T x S]` sources of each source-type inside documents of each type.
    pub src_by_doc: Vec<u32>,
    /// `[T]` all sources inside documents of each type.
    pub src_total_by_doc: Vec<u32>,
    /// `[T x K]` background-word topics per document-type.
    pub topic_by_doc: Vec<u32>,
    /// `[T]` all background words inside documents of each type.
    pub bg_total_by_doc: Vec<u32>,
    /// `[S x K]` source-word topics per source-type.
    pub topic_by_src: Vec<u32>,
    /// `[S]` all source words per source-type.
    pub srcword_total: Vec<u32>,
    /// `[V x K]` word/topic co-occurrences.
    pub word_by_topic: Vec<u32>,
    /// `[K]` tokens per topic.
    pub topic_total: Vec<u32>,
}

impl CountTables {
    pub fn zeros(num_doc_types: usize, num_source_types: usize, num_topics: usize, vocab_size: usize) -> Self {
        let (t, s, k, v) = (num_doc_types, num_source_types, num_topics, vocab_size);
        Self {
            num_doc_types: t,
            num_source_types: s,
            num_topics: k,
            vocab_size: v,
            doc_type: vec![0; t],
            src_by_doc: vec![0; t * s],
            src_total_by_doc: vec![0; t],
            topic_by_doc: vec![0; t * k],
            bg_total_by_doc: vec![0; t],
            topic_by_src: vec![0; s * k],
            srcword_total: vec![0; s],
            word_by_topic: vec![0; v * k],
            topic_total: vec![0; k],
        }
    }

    pub fn src_by_doc(&self, t: usize, s: usize) -> u32 {
        self.src_by_doc[t * self.num_source_types + s]
    }

    pub fn topic_by_doc(&self, t: usize, k: usize) -> u32 {
        self.topic_by_doc[t * self.num_topics + k]
    }

    pub fn topic_by_src(&self, s: usize, k: usize) -> u32 {
        self.topic_by_src[s * self.num_topics + k]
    }

    pub fn word_by_topic(&self, w: usize, k: usize) -> u32 {
        self.word_by_topic[w * self.num_topics + k]
    }

    pub(crate) fn source(&mut self, t: usize, s: usize, inc: bool) {
        let i = t * self.num_source_types + s;
        bump(&mut self.src_by_doc[i], inc);
        bump(&mut self.src_total_by_doc[t], inc);
    }

    pub(crate) fn background_word(&mut self, t: usize, k: usize, inc: bool) {
        bump(&mut self.topic_by_doc[t * self.num_topics + k], inc);
        bump(&mut self.bg_total_by_doc[t], inc);
    }

    pub(crate) fn source_word(&mut self, s: usize, k: usize, inc: bool) {
        bump(&mut self.topic_by_src[s * self.num_topics + k], inc);
        bump(&mut self.srcword_total[s], inc);
    }

    pub(crate) fn word(&mut self, w: usize, k: usize, inc: bool) {
        bump(&mut self.word_by_topic[w * self.num_topics + k], inc);
        bump(&mut self.topic_total[k], inc);
    }

    pub(crate) fn document(&mut self, t: usize, inc: bool) {
        bump(&mut self.doc_type[t], inc);
    }

    /// Checks the marginal identities between tables.
    pub fn check_marginals(&self) -> Result<(), String> {
        let (t, s, k, v) = (self.num_doc_types, self.num_source_types, self.num_topics, self.vocab_size);
        for ti in 0..t {
            let row: u32 = (0..s).map(|si| self.src_by_doc(ti, si)).sum();
            if row != self.src_total_by_doc[ti] {
                return Err(format!("src_by_doc row {ti} sums to {row}, total says {}", self.src_total_by_doc[ti]));
            }
            let row: u32 = (0..k).map(|ki| self.topic_by_doc(ti, ki)).sum();
            if row != self.bg_total_by_doc[ti] {
                return Err(format!("topic_by_doc row {ti} sums to {row}, total says {}", self.bg_total_by_doc[ti]));
            }
        }
        for si in 0..s {
            let row: u32 = (0..k).map(|ki| self.topic_by_src(si, ki)).sum();
            if row != self.srcword_total[si] {
                return Err(format!("topic_by_src row {si} sums to {row}, total says {}", self.srcword_total[si]));
            }
        }
        for ki in 0..k {
            let col: u32 = (0..v).map(|w| self.word_by_topic(w, ki)).sum();
            let parts = (0..t).map(|ti| self.topic_by_doc(ti, ki)).sum::<u32>()
                + (0..s).map(|si| self.topic_by_src(si, ki)).sum::<u32>();
            if col != self.topic_total[ki] || parts != col {
                return Err(format!("topic {ki}: column {col}, total {}, parts {parts}", self.topic_total[ki]));
            }
        }
        Ok(())
    }
}

#[inline]
fn bump(cell: &mut u32, inc: bool) {
    if inc {
        *cell += 1;
    } else {
        // decrements always follow a matching increment
        *cell = cell.checked_sub(1).expect("count table entry went negative");
    }
}
