//! A seeded multi-page site for navigation tests.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::browser::SiteBundle;
use crate::dom::serialize::escaped_text as escape_text;

const TOPICS: [&str; 10] = ["Products", "Pricing", "About", "Careers", "Support", "Blog", "Contact", "Docs", "Partners", "Legal"];

#[derive(Debug, Clone)]
pub struct SyntheticSite {
    pub bundle: SiteBundle,
    pub start_url: String,
    /// URL of every page, indexed by page number.
    pub pages: Vec<String>,
}

fn title(i: usize) -> String {
    if i == 0 {
        String::from("Home")
    } else {
        format!("{} {}", TOPICS[i % TOPICS.len()], i)
    }
}

/// `pages` pages under `http://site.test/`. Every page is reachable from the home page; about
/// one in six has no outgoing links, so some destinations are unreachable from some starts.
/// Roughly a quarter of the links are rendered as form buttons instead of anchors.
pub fn synthetic_site(pages: usize, seed: u64) -> SyntheticSite {
    let pages = pages.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = |i: usize| if i == 0 { String::from("/") } else { format!("/p/{}", i) };
    let mut links: Vec<Vec<usize>> = alloc::vec![Vec::new(); pages];
    // Random tree rooted at the home page keeps everything reachable.
    let mut order: Vec<usize> = (1..pages).collect();
    order.shuffle(&mut rng);
    let mut placed = alloc::vec![0usize];
    let dead_end = |i: usize| i != 0 && i % 6 == 5;
    for &page in &order {
        let parents: Vec<usize> = placed.iter().copied().filter(|&p| !dead_end(p)).collect();
        let parent = *parents.choose(&mut rng).expect("home page is never a dead end");
        links[parent].push(page);
        placed.push(page);
    }
    for (i, out) in links.iter_mut().enumerate() {
        if dead_end(i) {
            continue;
        }
        for _ in 0..rng.gen_range(0..3) {
            let target = rng.gen_range(0..pages);
            if target != i && !out.contains(&target) {
                out.push(target);
            }
        }
        out.sort_unstable();
    }

    let mut bundle = SiteBundle::new("http://site.test");
    for (i, out) in links.iter().enumerate() {
        let mut html = format!("<!DOCTYPE html><html><head><title>{}</title></head><body><h1>{}</h1><nav>", escape_text(&title(i)), escape_text(&title(i)));
        for &target in out {
            if rng.gen_bool(0.25) {
                html.push_str(&format!(
                    r#"<form action="{}" method="get"><button type="submit">Open {}</button></form>"#,
                    path(target),
                    escape_text(&title(target))
                ));
            } else {
                html.push_str(&format!(r#"<a href="{}">{}</a>"#, path(target), escape_text(&title(target))));
            }
        }
        html.push_str("</nav></body></html>\n");
        bundle.add_page(&path(i), html);
    }
    let urls: Vec<String> = (0..pages).map(|i| bundle.url(&path(i))).collect();
    SyntheticSite { start_url: urls[0].clone(), pages: urls, bundle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::browser::SimulatorSession;
    use crate::site::{crawl, CrawlLimits};
    use alloc::sync::Arc;

    #[test]
    fn crawl_reaches_every_page() {
        let site = synthetic_site(30, 5);
        let mut s = SimulatorSession::new(Arc::new(site.bundle.clone()));
        let r = crawl(&mut s, &site.start_url, CrawlLimits { max_depth: 40, ..Default::default() }).unwrap();
        assert_eq!(r.graph.nodes.len(), 30);
        assert!(r.failures.is_empty());
        assert!(r.graph.edges.iter().any(|e| e.affordance.kind == crate::site::AffordanceKind::Button));
    }
}
