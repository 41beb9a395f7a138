// UI state and the controller that mutates it. All ranking and highlighting
// comes from the API; this module only tracks what the user sees and does.

import { ApiClient } from "./api"
import type { ArticleDetail, Citations, FeedbackBody, Rating, SearchMode,
              SearchResult, SimilarEntry } from "./types"

export interface ResultFeedback {
  rating: Rating | null
  pending: boolean
}

export interface DetailView {
  article: ArticleDetail
  similar: SimilarEntry[]
  citations: Citations
}

export interface UiSearchState {
  queryText: string
  availableTopics: string[]
  selectedTopics: string[]
  mode: "auto" | SearchMode
  loading: boolean
  error: string | null
  queryId: string | null
  result: SearchResult | null
  feedback: Record<string, ResultFeedback>
  detail: DetailView | null
}

export function initialState(): UiSearchState {
  return {
    queryText: "",
    availableTopics: [],
    selectedTopics: [],
    mode: "auto",
    loading: false,
    error: null,
    queryId: null,
    result: null,
    feedback: {},
    detail: null,
  }
}

interface QueuedEvent {
  body: FeedbackBody
  docId: string
}

let eventCounter = 0

export function newEventId(): string {
  eventCounter += 1
  return `evt-${Date.now().toString(36)}-${eventCounter.toString(36)}-${
    Math.floor(Math.random() * 0xffffff).toString(36)}`
}

export class SearchController {
  readonly state: UiSearchState = initialState()
  private requestCounter = 0
  private queue: QueuedEvent[] = []
  // stable event ids per (doc, action) so replays are idempotent server-side
  private eventIds = new Map<string, string>()
  private listeners: Array<(state: UiSearchState) => void> = []

  constructor(private readonly api: ApiClient) {}

  onChange(listener: (state: UiSearchState) => void): void {
    this.listeners.push(listener)
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state)
  }

  async init(): Promise<void> {
    try {
      this.state.availableTopics = await this.api.topics()
      this.state.error = null
    } catch (err) {
      this.state.error = `Failed to load topics: ${String(err)}`
    }
    this.notify()
  }

  setQuery(text: string): void {
    this.state.queryText = text
    this.notify()
  }

  setMode(mode: "auto" | SearchMode): void {
    this.state.mode = mode
    this.notify()
  }

  /** Toggle a facet. Unknown names are ignored, so the selection always
   * stays within the list fetched from the topics endpoint. Changing the
   * facet after a search re-issues the query with the new filter. */
  async toggleTopic(name: string): Promise<void> {
    if (!this.state.availableTopics.includes(name)) return
    const idx = this.state.selectedTopics.indexOf(name)
    if (idx >= 0) this.state.selectedTopics.splice(idx, 1)
    else this.state.selectedTopics.push(name)
    this.notify()
    if (this.state.result !== null) await this.runSearch()
  }

  feedbackEnabled(): boolean {
    return this.state.queryId !== null
  }

  /** Issue the search. Concurrent in-flight requests resolve
   * last-write-wins via a monotonically increasing request counter. */
  async runSearch(k = 10): Promise<void> {
    const text = this.state.queryText.trim()
    if (!text) return
    const seq = ++this.requestCounter
    this.state.loading = true
    this.state.error = null
    this.notify()
    try {
      const mode = this.state.mode === "auto" ? undefined : this.state.mode
      const resp = await this.api.search(text, this.state.selectedTopics, mode, k)
      if (seq !== this.requestCounter) return // a newer request owns the state
      this.state.queryId = resp.query_id
      this.state.result = resp.result
      this.state.feedback = {}
      for (const doc of resp.result.docs) {
        this.state.feedback[doc.doc_id] = { rating: null, pending: false }
      }
      this.state.loading = false
    } catch (err) {
      if (seq !== this.requestCounter) return
      this.state.loading = false
      this.state.error = String(err)
    }
    this.notify()
  }

  private stableEventId(key: string): string {
    let id = this.eventIds.get(key)
    if (!id) {
      id = newEventId()
      this.eventIds.set(key, id)
    }
    return id
  }

  private async send(event: QueuedEvent): Promise<boolean> {
    try {
      await this.api.feedback(event.body)
      return true
    } catch {
      this.queue.push(event)
      const fb = this.state.feedback[event.docId]
      if (fb) fb.pending = true
      this.notify()
      return false
    }
  }

  /** Implicit feedback: the user opened a result card. */
  async clickResult(docId: string): Promise<void> {
    if (!this.feedbackEnabled() || !this.state.result) return
    const rank = this.state.result.docs.findIndex(d => d.doc_id === docId) + 1
    if (rank === 0) return
    await this.send({
      docId,
      body: {
        event_id: this.stableEventId(`${this.state.queryId}:click:${docId}`),
        query_id: this.state.queryId as string,
        doc_id: docId,
        kind: "click",
        rank,
      },
    })
  }

  /** Explicit feedback: up/down rating. Repeating the same rating is a
   * no-op; switching sends a new event. */
  async rate(docId: string, rating: Rating): Promise<void> {
    if (!this.feedbackEnabled()) return
    const fb = this.state.feedback[docId]
    if (!fb || fb.rating === rating) return
    fb.rating = rating
    this.notify()
    const ok = await this.send({
      docId,
      body: {
        event_id: this.stableEventId(`${this.state.queryId}:rating:${docId}:${rating}`),
        query_id: this.state.queryId as string,
        doc_id: docId,
        kind: "rating",
        rating,
      },
    })
    if (ok) {
      fb.pending = false
      this.notify()
    }
  }

  /** Open the article detail panel: metadata plus graph-powered
   * recommendations and citation navigation. Recommendations degrade to an
   * empty list when embeddings are not available server-side. */
  async openArticle(docId: string): Promise<void> {
    try {
      const article = await this.api.article(docId)
      let similar: DetailView["similar"] = []
      try {
        similar = await this.api.similar(docId, 5)
      } catch {
        // embeddings not built; the panel simply omits recommendations
      }
      const citations = await this.api.citations(docId)
      this.state.detail = { article, similar, citations }
    } catch (err) {
      this.state.error = String(err)
    }
    this.notify()
  }

  closeDetail(): void {
    this.state.detail = null
    this.notify()
  }

  pendingCount(): number {
    return this.queue.length
  }

  /** Retry queued feedback events (e.g., after a network failure). */
  async flushQueue(): Promise<void> {
    const retry = this.queue
    this.queue = []
    let failed = false
    for (const event of retry) {
      const ok = await this.send(event)
      failed = failed || !ok
      if (ok) {
        const fb = this.state.feedback[event.docId]
        if (fb) fb.pending = false
      }
    }
    this.notify()
  }
}
