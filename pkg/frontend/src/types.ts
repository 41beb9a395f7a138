// Payload shapes of the search API. The UI consumes these verbatim and never
// re-derives scores, rankings, or highlight offsets.

export interface DocResult {
  doc_id: string
  score: number
  title: string
  snippet: string
  topics: string[]
}

export interface PassageResult {
  doc_id: string
  passage_index: number
  score: number
  text: string
  section: string
}

export interface AnswerSpan {
  doc_id: string
  passage_index: number
  char_start: number
  char_end: number
  text: string
  confidence: number
}

export interface FaqAnswer {
  question: string
  answer: string
  similarity: number
}

export interface SearchResult {
  docs: DocResult[]
  passages: PassageResult[]
  answers: AnswerSpan[]
  faq_answer: FaqAnswer | null
  mode: string
}

export interface SearchResponse {
  query_id: string
  result: SearchResult
}

export interface ArticleDetail {
  doc_id: string
  title: string
  abstract: string
  body: string
  authors: string[]
  topics: string[]
  cited_doc_ids: string[]
}

export interface SimilarEntry {
  doc_id: string
  similarity: number
  title: string
}

export interface Citations {
  cites: string[]
  cited_by: string[]
}

export type Rating = "up" | "down"
export type FeedbackKind = "click" | "rating"

export interface FeedbackBody {
  event_id: string
  query_id: string
  doc_id: string
  kind: FeedbackKind
  rating?: Rating
  rank?: number
}

export type SearchMode = "keyword" | "natural_language"
