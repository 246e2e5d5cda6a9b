// Typed client for the session service. All console traffic goes through
// this module; nothing else touches the network.
export class ApiError extends Error {
    constructor(status, code, message) {
        super(message);
        this.status = status;
        this.code = code;
        this.name = 'ApiError';
    }
}
const sleep = (ms) => new Promise((r) => setTimeout(r, ms));
export class ApiClient {
    // retryDelayMs grows 2x per attempt; HTTP error responses never retry,
    // only network-level faults do
    constructor(base = '', retryDelayMs = 1000) {
        this.base = base;
        this.retryDelayMs = retryDelayMs;
    }
    async request(path, init, retries = 0) {
        let attempt = 0;
        for (;;) {
            let response;
            try {
                response = await fetch(this.base + path, init);
            }
            catch (err) {
                if (attempt >= retries)
                    throw err;
                await sleep(this.retryDelayMs * 2 ** attempt);
                attempt += 1;
                continue;
            }
            if (!response.ok) {
                let code = 'error';
                let message = `${response.status}`;
                try {
                    const body = await response.json();
                    if (body && typeof body.code === 'string')
                        code = body.code;
                    if (body && typeof body.message === 'string')
                        message = body.message;
                }
                catch {
                    // non-JSON error body; keep the status text
                }
                throw new ApiError(response.status, code, message);
            }
            return response.json();
        }
    }
    post(path, body) {
        return this.request(path, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify(body),
        });
    }
    getSession(id, retries = 2) {
        return this.request(`/sessions/${id}`, undefined, retries);
    }
    createSession(config, expertSeeds) {
        return this.post('/sessions', { config, expert_seeds: expertSeeds });
    }
    initObservations(id, values) {
        return this.post(`/sessions/${id}/init-observations`, { values });
    }
    propose(id) {
        return this.post(`/sessions/${id}/propose`, {});
    }
    choose(id, index, chooser = 'human') {
        return this.post(`/sessions/${id}/choice`, { index, chooser });
    }
    observe(id, y) {
        return this.post(`/sessions/${id}/observation`, { y });
    }
}
