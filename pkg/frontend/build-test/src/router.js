/**
 * Path router for the six pages. Keyframe sample seeds live in the
 * query string so back/forward navigation reproduces result views.
 */
const KEY_PATTERN = /^[A-Za-z0-9_-]{22}$/;
export function seedsFromQuery(search) {
    const seeds = new Map();
    const params = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
    for (const [name, value] of params) {
        const match = /^s(\d+)$/.exec(name);
        if (!match)
            continue;
        const seed = Number(value);
        if (Number.isInteger(seed) && seed >= 0) {
            seeds.set(Number(match[1]), seed);
        }
    }
    return seeds;
}
export function seedsToQuery(seeds) {
    const params = new URLSearchParams();
    for (const videoId of [...seeds.keys()].sort((a, b) => a - b)) {
        params.set(`s${videoId}`, String(seeds.get(videoId)));
    }
    const text = params.toString();
    return text ? `?${text}` : "";
}
export function parseRoute(pathname, search = "") {
    const parts = pathname.split("/").filter((p) => p.length > 0);
    if (parts.length === 0)
        return { page: "home" };
    const [head, key] = parts;
    if (head === "upload" && parts.length === 1)
        return { page: "upload" };
    if (head === "about" && parts.length === 1)
        return { page: "about" };
    if (head === "contact" && parts.length === 1)
        return { page: "contact" };
    if (head === "results" && parts.length === 2 && KEY_PATTERN.test(key)) {
        return { page: "results", key, seeds: seedsFromQuery(search) };
    }
    if (head === "report" && parts.length === 2 && KEY_PATTERN.test(key)) {
        return { page: "report", key };
    }
    return { page: "not-found", path: pathname };
}
export function routePath(route) {
    switch (route.page) {
        case "home":
            return "/";
        case "upload":
            return "/upload";
        case "results":
            return `/results/${route.key}${seedsToQuery(route.seeds)}`;
        case "report":
            return `/report/${route.key}`;
        case "about":
            return "/about";
        case "contact":
            return "/contact";
        case "not-found":
            return route.path;
    }
}
