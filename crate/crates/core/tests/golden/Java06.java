import java.util.Map;
import java.util.HashMap;

class Counter {
    Map<String, Integer> count(String[] words) {
        Map<String, Integer> m = new HashMap<>();
        for (String w : words) {
            m.merge(w, 1, Integer::sum);
        }
        return m;
    }
}
